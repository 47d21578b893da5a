#include "drmn/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <set>
#include <type_traits>

#include "binio.hpp"
#include "drmn/error.hpp"

namespace drmn {

using nlohmann::json;

namespace {

// Reads typed fields from one JSON object, then rejects whatever is left.
class StrictObject {
 public:
  StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) fail(Errc::config, where_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    const json& v = *it;
    auto bad = [&](const char* want) {
      fail(Errc::config, where_ + "." + key + " must be " + want + ", got " + v.dump());
    };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad("a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad("a number");
      out = v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) bad("a non-negative integer");
      out = v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) bad("an integer");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad("a string");
      out = v.get<std::string>();
    } else {
      out = v;
    }
  }

  const json* sub(const char* key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!used_.count(k)) fail(Errc::config, "unknown key \"" + k + "\" in " + where_);
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

}  // namespace

json to_json(const TrainConfig& c) {
  return json{{"lambda_sc", c.lambda_sc},
              {"lambda_gc", c.lambda_gc},
              {"base_lr", c.base_lr},
              {"decay_every", c.decay_every},
              {"decay_factor", c.decay_factor},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"gamma", c.gamma},
              {"reduction", c.reduction},
              {"seed", c.seed},
              {"mff", c.mff},
              {"aca", c.aca},
              {"sit", c.sit},
              {"global_branch", c.global_branch},
              {"fusion_residual", c.fusion_residual},
              {"sit_mix", c.sit_mix},
              {"sit_heads", c.sit_heads},
              {"sit_mlp_ratio", c.sit_mlp_ratio},
              {"gc_over_all_classes", c.gc_over_all_classes},
              {"calibration_bonus", c.calibration_bonus},
              {"adam_beta1", c.adam.beta1},
              {"adam_beta2", c.adam.beta2},
              {"adam_eps", c.adam.eps}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  StrictObject o(j, "train");
  o.get("lambda_sc", c.lambda_sc);
  o.get("lambda_gc", c.lambda_gc);
  o.get("base_lr", c.base_lr);
  o.get("decay_every", c.decay_every);
  o.get("decay_factor", c.decay_factor);
  o.get("epochs", c.epochs);
  o.get("batch_size", c.batch_size);
  o.get("gamma", c.gamma);
  o.get("reduction", c.reduction);
  o.get("seed", c.seed);
  o.get("mff", c.mff);
  o.get("aca", c.aca);
  o.get("sit", c.sit);
  o.get("global_branch", c.global_branch);
  o.get("fusion_residual", c.fusion_residual);
  o.get("sit_mix", c.sit_mix);
  o.get("sit_heads", c.sit_heads);
  o.get("sit_mlp_ratio", c.sit_mlp_ratio);
  o.get("gc_over_all_classes", c.gc_over_all_classes);
  o.get("calibration_bonus", c.calibration_bonus);
  o.get("adam_beta1", c.adam.beta1);
  o.get("adam_beta2", c.adam.beta2);
  o.get("adam_eps", c.adam.eps);
  o.finish();
  c.check();
  return c;
}

json to_json(const EnsembleConfig& c) {
  return json{{"beta", c.beta}, {"unseen_bonus", c.unseen_bonus}, {"enabled", c.enabled}};
}

EnsembleConfig ensemble_config_from_json(const json& j) {
  EnsembleConfig c;
  StrictObject o(j, "ensemble");
  o.get("beta", c.beta);
  o.get("unseen_bonus", c.unseen_bonus);
  o.get("enabled", c.enabled);
  o.finish();
  c.check();
  return c;
}

json to_json(const RunConfig& c) {
  return json{{"data", c.data}, {"out", c.out}, {"train", to_json(c.train)}, {"ensemble", to_json(c.ensemble)}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  StrictObject o(j, "config");
  o.get("data", c.data);
  o.get("out", c.out);
  if (const json* t = o.sub("train")) c.train = train_config_from_json(*t);
  if (const json* e = o.sub("ensemble")) c.ensemble = ensemble_config_from_json(*e);
  o.finish();
  return c;
}

json to_json(const ModelConfig& c) {
  json shapes = json::array();
  for (const auto& s : c.level_shapes) shapes.push_back({s.channels, s.height, s.width});
  return json{{"level_shapes", shapes},
              {"ref_level", c.ref_level},
              {"n_attributes", c.n_attributes},
              {"n_classes", c.n_classes},
              {"reduction", c.reduction},
              {"sit_heads", c.sit.heads},
              {"sit_mlp_ratio", c.sit.mlp_ratio},
              {"gamma", c.gamma},
              {"mff", c.mff},
              {"aca", c.aca},
              {"sit", c.use_sit},
              {"global_branch", c.global_branch},
              {"fusion_residual", c.fusion_residual}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  StrictObject o(j, "model");
  json shapes;
  o.get("level_shapes", shapes);
  if (!shapes.is_array()) fail(Errc::config, "model.level_shapes must be an array");
  for (const auto& s : shapes) {
    if (!s.is_array() || s.size() != 3) fail(Errc::config, "model.level_shapes entries must be [C, H, W]");
    c.level_shapes.push_back(LevelShape{s[0].get<std::uint32_t>(), s[1].get<std::uint32_t>(), s[2].get<std::uint32_t>()});
  }
  o.get("ref_level", c.ref_level);
  o.get("n_attributes", c.n_attributes);
  o.get("n_classes", c.n_classes);
  o.get("reduction", c.reduction);
  o.get("sit_heads", c.sit.heads);
  o.get("sit_mlp_ratio", c.sit.mlp_ratio);
  o.get("gamma", c.gamma);
  o.get("mff", c.mff);
  o.get("aca", c.aca);
  o.get("sit", c.use_sit);
  o.get("global_branch", c.global_branch);
  o.get("fusion_residual", c.fusion_residual);
  o.finish();
  c.check();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  const std::string text = binio::read_file(file);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::config, file.filename().string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig& c, const std::filesystem::path& file) {
  binio::write_file(file, to_json(c).dump(2) + "\n");
}

bool apply_seed_override(TrainConfig& c) {
  const char* env = std::getenv("DRMN_SEED");
  if (!env || !*env) return false;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') fail(Errc::config, std::string("DRMN_SEED is not a seed: ") + env);
  c.seed = v;
  return true;
}

}  // namespace drmn

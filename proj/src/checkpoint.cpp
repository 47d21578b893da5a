#include "drmn/checkpoint.hpp"

#include <algorithm>

#include "binio.hpp"
#include "drmn/config.hpp"
#include "drmn/error.hpp"

namespace drmn {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json history_json(const std::vector<EpochMetrics>& h) {
  json out = json::array();
  for (const auto& m : h) {
    out.push_back(json{{"epoch", m.epoch},
                       {"lr", m.lr},
                       {"loss_total", m.loss_total},
                       {"loss_ac_pre", m.loss_ac_pre},
                       {"loss_ac_post", opt(m.loss_ac_post)},
                       {"loss_gc", opt(m.loss_gc)},
                       {"czsl_acc", m.czsl_acc},
                       {"gzsl_u", m.gzsl_u},
                       {"gzsl_s", m.gzsl_s},
                       {"gzsl_h", m.gzsl_h}});
  }
  return out;
}

std::vector<EpochMetrics> history_from(const json& j) {
  std::vector<EpochMetrics> out;
  for (const auto& e : j) {
    EpochMetrics m;
    m.epoch = e.at("epoch").get<int>();
    m.lr = e.at("lr").get<double>();
    m.loss_total = e.at("loss_total").get<double>();
    m.loss_ac_pre = e.at("loss_ac_pre").get<double>();
    m.loss_ac_post = opt_from(e.at("loss_ac_post"));
    m.loss_gc = opt_from(e.at("loss_gc"));
    m.czsl_acc = e.at("czsl_acc").get<double>();
    m.gzsl_u = e.at("gzsl_u").get<double>();
    m.gzsl_s = e.at("gzsl_s").get<double>();
    m.gzsl_h = e.at("gzsl_h").get<double>();
    out.push_back(m);
  }
  return out;
}

void put_payload(binio::Writer& w, const Tensor& t) {
  for (double v : t.data()) w.f64(v);
}

Tensor get_payload(binio::Reader& r, const Shape& shape) {
  Tensor t(shape, 0.0);
  for (auto& v : t.storage()) v = r.f64();
  return t;
}

}  // namespace

std::string encode_checkpoint(const TrainState& s) {
  if (s.adam.size() != s.params.size()) fail(Errc::shape, "optimizer state count differs from parameter count");
  binio::Writer w;
  w.bytes(std::string_view(kCkptMagic, 8));
  w.u32(kCkptVersion);
  w.u32(static_cast<std::uint32_t>(s.params.size()));
  for (const auto& p : s.params) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) w.u64(d);
    put_payload(w, p.value);
  }
  w.u32(static_cast<std::uint32_t>(s.adam.size()));
  for (std::size_t i = 0; i < s.adam.size(); ++i) {
    const AdamState& a = s.adam[i];
    if (a.m.shape() != s.params[i].value.shape() || a.v.shape() != s.params[i].value.shape()) {
      fail(Errc::shape, "optimizer state for " + s.params[i].name + " has the wrong shape");
    }
    w.u64(a.t);
    put_payload(w, a.m);
    put_payload(w, a.v);
  }
  w.u32(static_cast<std::uint32_t>(s.next_epoch));
  for (std::uint64_t x : s.rng_state) w.u64(x);
  const json echo{{"model", to_json(s.model_config)},
                  {"train", to_json(s.train)},
                  {"ensemble", to_json(s.ensemble)},
                  {"history", history_json(s.history)}};
  w.str(echo.dump());
  return w.data();
}

TrainState decode_checkpoint(std::string_view bytes, const std::string& what) {
  if (bytes.size() < 12 || !std::equal(kCkptMagic, kCkptMagic + 8, bytes.begin())) {
    fail(Errc::format, what + ": bad magic");
  }
  binio::Reader r(bytes.substr(8), what);
  if (const auto v = r.u32(); v != kCkptVersion) {
    fail(Errc::format, what + ": unsupported version " + std::to_string(v));
  }
  TrainState s;
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 4) fail(Errc::format, what + ": tensor " + name + " has rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
    s.params.add(std::move(name), get_payload(r, shape));
  }
  const std::uint32_t n_states = r.u32();
  if (n_states != n) fail(Errc::format, what + ": optimizer state count differs from tensor count");
  for (std::uint32_t i = 0; i < n_states; ++i) {
    AdamState a;
    a.t = r.u64();
    a.m = get_payload(r, s.params[i].value.shape());
    a.v = get_payload(r, s.params[i].value.shape());
    s.adam.push_back(std::move(a));
  }
  s.next_epoch = static_cast<int>(r.u32());
  for (auto& x : s.rng_state) x = r.u64();
  const std::string text = r.str();
  if (!r.done()) fail(Errc::format, what + ": trailing bytes");
  try {
    const json echo = json::parse(text);
    s.model_config = model_config_from_json(echo.at("model"));
    s.train = train_config_from_json(echo.at("train"));
    s.ensemble = ensemble_config_from_json(echo.at("ensemble"));
    s.history = history_from(echo.at("history"));
  } catch (const json::exception& e) {
    fail(Errc::format, what + ": config echo: " + e.what());
  }
  for (auto& a : s.adam) a.hyper = s.train.adam;
  return s;
}

void save_checkpoint(const TrainState& s, const std::filesystem::path& file) {
  binio::write_file(file, encode_checkpoint(s));
}

TrainState load_checkpoint(const std::filesystem::path& file) {
  return decode_checkpoint(binio::read_file(file), file.filename().string());
}

}  // namespace drmn

#include "drmn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drmn/error.hpp"
#include "drmn/resample.hpp"
#include "drmn/rng.hpp"
#include "json.hpp"

namespace drmn {

namespace fs = std::filesystem;
using nlohmann::json;

void SynthConfig::check() const {
  if (n_seen > n_classes) fail(Errc::config, "seen exceeds classes");
  if (n_seen == n_classes) fail(Errc::config, "unseen count must be at least 1");
  if (n_seen == 0) fail(Errc::config, "seen count must be at least 1");
  if (n_attributes == 0) fail(Errc::config, "need at least one attribute");
  if (images_per_class < 2) fail(Errc::config, "need at least two images per class");
  if (level_shapes.empty()) fail(Errc::config, "need at least one feature level");
  if (ref_level >= level_shapes.size()) fail(Errc::config, "ref_level out of range");
  for (const auto& s : level_shapes)
    if (s.numel() == 0) fail(Errc::config, "level extents must be positive");
  if (!(noise >= 0.0)) fail(Errc::config, "noise must be non-negative");
  if (!(attr_prob > 0.0 && attr_prob < 1.0)) fail(Errc::config, "attr_prob must lie in (0, 1)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail(Errc::config, "train_fraction must lie in (0, 1)");
}

SynthDataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.check();
  Rng rng(seed);
  const std::size_t n_classes = cfg.n_classes, n_attr = cfg.n_attributes;
  const LevelShape ref_shape = cfg.level_shapes[cfg.ref_level];
  const std::size_t regions = ref_shape.regions();
  const std::size_t c_ref = ref_shape.channels;

  // 1. class semantics
  Tensor z = Tensor::matrix(n_classes, n_attr);
  for (std::size_t c = 0; c < n_classes; ++c) {
    bool accepted = false;
    for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
      bool any = false;
      for (std::size_t a = 0; a < n_attr; ++a) {
        z.at(c, a) = rng.uniform() < cfg.attr_prob ? 1.0 : 0.0;
        any = any || z.at(c, a) > 0.0;
      }
      if (!any) continue;
      accepted = true;
      for (std::size_t prev = 0; prev < c && accepted; ++prev) {
        accepted = !std::equal(z.row(prev).begin(), z.row(prev).end(), z.row(c).begin());
      }
    }
    if (!accepted) fail(Errc::config, "could not draw unique class semantics after 1000 tries");
  }

  // 2. seen / unseen
  std::vector<ClassId> classes(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) classes[c] = static_cast<ClassId>(c);
  rng.shuffle(classes);
  Split split;
  split.seen_classes.assign(classes.begin(), classes.begin() + cfg.n_seen);
  split.unseen_classes.assign(classes.begin() + cfg.n_seen, classes.end());
  std::sort(split.seen_classes.begin(), split.seen_classes.end());
  std::sort(split.unseen_classes.begin(), split.unseen_classes.end());

  // 3. attribute cells
  std::vector<std::uint32_t> cells(regions);
  for (std::size_t r = 0; r < regions; ++r) cells[r] = static_cast<std::uint32_t>(r);
  rng.shuffle(cells);
  SynthTruth truth;
  truth.ref_level = cfg.ref_level;
  truth.ref_height = ref_shape.height;
  truth.ref_width = ref_shape.width;
  for (std::size_t a = 0; a < n_attr; ++a) truth.attribute_cells.push_back(cells[a % regions]);

  // 4. signatures
  truth.signatures = Tensor::matrix(n_attr, c_ref);
  for (auto& v : truth.signatures.storage()) v = rng.normal(0.0, cfg.signal_scale);

  // 5. channel mixing for the other levels
  std::vector<Tensor> mixing(cfg.level_shapes.size());
  for (std::size_t l = 0; l < cfg.level_shapes.size(); ++l) {
    if (l == cfg.ref_level) continue;
    mixing[l] = Tensor::matrix(cfg.level_shapes[l].channels, c_ref);
    const double sd = 1.0 / std::sqrt(static_cast<double>(c_ref));
    for (auto& v : mixing[l].storage()) v = rng.normal(0.0, sd);
  }

  // Noise-free per-class reference pattern and its transforms.
  const std::size_t n_levels = cfg.level_shapes.size();
  std::vector<std::vector<std::vector<double>>> clean(n_classes, std::vector<std::vector<double>>(n_levels));
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::vector<double> ref(c_ref * regions, 0.0);
    for (std::size_t a = 0; a < n_attr; ++a) {
      if (z.at(c, a) <= 0.0) continue;
      const std::size_t cell = truth.attribute_cells[a];
      for (std::size_t ch = 0; ch < c_ref; ++ch) ref[ch * regions + cell] += z.at(c, a) * truth.signatures.at(a, ch);
    }
    for (std::size_t l = 0; l < n_levels; ++l) {
      if (l == cfg.ref_level) {
        clean[c][l] = ref;
        continue;
      }
      const LevelShape& s = cfg.level_shapes[l];
      std::vector<double> mixed(std::size_t{s.channels} * regions, 0.0);
      for (std::size_t o = 0; o < s.channels; ++o)
        for (std::size_t i = 0; i < c_ref; ++i) {
          const double m = mixing[l].at(o, i);
          for (std::size_t r = 0; r < regions; ++r) mixed[o * regions + r] += m * ref[i * regions + r];
        }
      clean[c][l] = resample_map(mixed, s.channels, ref_shape.height, ref_shape.width, s.height, s.width);
    }
  }

  // 6. images
  ZslDataset ds;
  const std::size_t n_images = n_classes * cfg.images_per_class;
  ds.features.n_images = n_images;
  ds.features.ref_level = cfg.ref_level;
  for (const auto& s : cfg.level_shapes) ds.features.levels.push_back(FeatureLevel{s, std::vector<float>(n_images * s.numel())});
  ds.labels.resize(n_images);
  for (std::size_t img = 0; img < n_images; ++img) {
    const std::size_t c = img / cfg.images_per_class;
    ds.labels[img] = static_cast<ClassId>(c);
    for (std::size_t l = 0; l < n_levels; ++l) {
      auto out = ds.features.levels[l].image(img);
      const auto& base = clean[c][l];
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(base[i] + cfg.noise * rng.normal());
      }
    }
  }

  // 7. train / test split within seen classes
  for (ClassId c : split.seen_classes) {
    std::vector<ImageId> ids(cfg.images_per_class);
    for (std::size_t j = 0; j < ids.size(); ++j) ids[j] = static_cast<ImageId>(c * cfg.images_per_class + j);
    rng.shuffle(ids);
    auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(ids.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
    std::sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
    split.train_ids.insert(split.train_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test_seen_ids.insert(split.test_seen_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  }
  for (ClassId c : split.unseen_classes)
    for (std::size_t j = 0; j < cfg.images_per_class; ++j)
      split.test_unseen_ids.push_back(static_cast<ImageId>(c * cfg.images_per_class + j));

  ds.split = std::move(split);
  ds.semantics.z = std::move(z);
  for (std::size_t a = 0; a < n_attr; ++a) ds.semantics.attribute_names.push_back("attr_" + std::to_string(a));

  validate(ds);
  return SynthDataset{std::move(ds), std::move(truth)};
}

void save_synth_truth(const SynthTruth& truth, const fs::path& dir) {
  json j;
  j["ref_level"] = truth.ref_level;
  j["ref_height"] = truth.ref_height;
  j["ref_width"] = truth.ref_width;
  j["attribute_cells"] = truth.attribute_cells;
  j["signature_shape"] = {truth.signatures.rows(), truth.signatures.cols()};
  j["signatures"] = truth.signatures.storage();
  std::ofstream out(dir / "synth_truth.json", std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write synth_truth.json in " + dir.string());
  out << j.dump() << '\n';
}

SynthTruth load_synth_truth(const fs::path& dir) {
  std::ifstream in(dir / "synth_truth.json");
  if (!in) fail(Errc::io, "no synth_truth.json in " + dir.string());
  json j;
  try {
    j = json::parse(in);
    SynthTruth t;
    t.ref_level = j.at("ref_level").get<std::uint32_t>();
    t.ref_height = j.at("ref_height").get<std::uint32_t>();
    t.ref_width = j.at("ref_width").get<std::uint32_t>();
    t.attribute_cells = j.at("attribute_cells").get<std::vector<std::uint32_t>>();
    const auto shape = j.at("signature_shape").get<std::vector<std::size_t>>();
    t.signatures = Tensor({shape.at(0), shape.at(1)}, j.at("signatures").get<std::vector<double>>());
    return t;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format, std::string("synth_truth.json: ") + e.what());
  }
}

SynthDataset gen_synthetic(const SynthConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  SynthDataset out = generate_synthetic(cfg, seed);
  save_dataset(out.dataset, dir);
  save_synth_truth(out.truth, dir);
  return out;
}

}  // namespace drmn

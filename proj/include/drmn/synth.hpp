#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "drmn/dataset.hpp"

namespace drmn {

/// Synthetic ZSL benchmark with a known attribute -> feature process.
struct SynthConfig {
  std::uint32_t n_classes = 20;
  std::uint32_t n_seen = 15;
  std::uint32_t n_attributes = 12;
  std::uint32_t images_per_class = 30;
  std::vector<LevelShape> level_shapes = {{16, 16, 16}, {24, 8, 8}, {32, 4, 4}, {48, 2, 2}};
  std::uint32_t ref_level = 2;
  double noise = 0.1;          // white-noise stddev on every stored value
  double attr_prob = 0.5;      // Bernoulli rate of each binary attribute
  double signal_scale = 0.2;   // stddev of signature entries
  double train_fraction = 0.8;  // per seen class

  void check() const;
};

/// Generator ground truth, kept beside the dataset as synth_truth.json.
struct SynthTruth {
  std::vector<std::uint32_t> attribute_cells;  // region index (row * W + col) per attribute
  Tensor signatures;                           // n_attributes x C_ref
  std::uint32_t ref_level = 0;
  std::uint32_t ref_height = 0;
  std::uint32_t ref_width = 0;
};

struct SynthDataset {
  ZslDataset dataset;
  SynthTruth truth;
};

/// Pure function of (cfg, seed). Random draws happen in this fixed order
/// from one xoshiro256** stream seeded with `seed`:
///   1. class semantics, row by row (rejection on zero/duplicate rows)
///   2. class permutation; its last (n_classes - n_seen) entries are unseen
///   3. region permutation; attribute a is planted at perm[a mod R]
///   4. attribute signatures, attribute-major
///   5. channel-mixing matrices for every non-reference level, level order
///   6. noise for every image (id order), level by level, all entries
///   7. per seen class (ascending id), a shuffle of its images; the first
///      round(train_fraction * n) become train ids
/// Images are class-major: image id = class * images_per_class + j.
SynthDataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

/// generate_synthetic + save_dataset + synth_truth.json.
SynthDataset gen_synthetic(const SynthConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

void save_synth_truth(const SynthTruth& truth, const std::filesystem::path& dir);
SynthTruth load_synth_truth(const std::filesystem::path& dir);

}  // namespace drmn

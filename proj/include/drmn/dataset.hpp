#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "drmn/tensor.hpp"

namespace drmn {

using ClassId = std::uint32_t;
using ImageId = std::uint32_t;

struct LevelShape {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  std::size_t regions() const { return std::size_t{height} * width; }
  std::size_t numel() const { return std::size_t{channels} * height * width; }
  friend bool operator==(const LevelShape&, const LevelShape&) = default;
};

/// One pyramid level for every image, stored as in the .feat payload.
struct FeatureLevel {
  LevelShape shape;
  std::vector<float> data;  // [image][channel][row][col]

  std::span<const float> image(std::size_t i) const {
    return std::span<const float>(data).subspan(i * shape.numel(), shape.numel());
  }
  std::span<float> image(std::size_t i) {
    return std::span<float>(data).subspan(i * shape.numel(), shape.numel());
  }
  friend bool operator==(const FeatureLevel&, const FeatureLevel&) = default;
};

struct MultiLevelFeatures {
  std::vector<FeatureLevel> levels;
  std::size_t ref_level = 0;
  std::size_t n_images = 0;

  const FeatureLevel& ref() const { return levels.at(ref_level); }
  const FeatureLevel& last() const { return levels.back(); }
  friend bool operator==(const MultiLevelFeatures&, const MultiLevelFeatures&) = default;
};

struct ClassSemanticMatrix {
  Tensor z;  // n_classes x n_attributes
  std::vector<std::string> attribute_names;

  std::size_t n_classes() const { return z.rows(); }
  std::size_t n_attributes() const { return z.cols(); }
  friend bool operator==(const ClassSemanticMatrix&, const ClassSemanticMatrix&) = default;
};

struct Split {
  std::vector<ClassId> seen_classes;
  std::vector<ClassId> unseen_classes;
  std::vector<ImageId> train_ids;
  std::vector<ImageId> test_seen_ids;
  std::vector<ImageId> test_unseen_ids;

  bool is_unseen(ClassId c) const;
  bool is_seen(ClassId c) const;
  friend bool operator==(const Split&, const Split&) = default;
};

struct ZslDataset {
  MultiLevelFeatures features;
  std::vector<ClassId> labels;
  ClassSemanticMatrix semantics;
  Split split;

  std::size_t n_images() const { return labels.size(); }
  std::size_t n_classes() const { return semantics.n_classes(); }
  std::size_t n_attributes() const { return semantics.n_attributes(); }
  friend bool operator==(const ZslDataset&, const ZslDataset&) = default;
};

/// Throws ValidationError (distinct ValidationCode per violated invariant).
void validate(const ZslDataset& ds);

/// Reads and validates a dataset directory.
ZslDataset load_dataset(const std::filesystem::path& dir);
/// Writes meta.json, level_<l>.feat, class_attrs.csv and splits.json.
void save_dataset(const ZslDataset& ds, const std::filesystem::path& dir);

inline constexpr char kFeatMagic[8] = {'D', 'R', 'M', 'N', 'F', 'E', 'A', 'T'};
inline constexpr std::uint32_t kFeatVersion = 1;
inline constexpr int kFormatVersion = 1;

void write_feature_file(const std::filesystem::path& file, const FeatureLevel& level,
                        std::size_t n_images);
FeatureLevel read_feature_file(const std::filesystem::path& file);

/// Shuffled mini-batches over `ids`. The order is a pure function of
/// (seed, epoch); the final batch may be short.
std::vector<std::vector<ImageId>> batch_iter(std::span<const ImageId> ids, std::size_t batch_size,
                                             std::uint64_t seed, int epoch);

}  // namespace drmn

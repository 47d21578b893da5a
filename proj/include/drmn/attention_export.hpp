#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "drmn/model.hpp"
#include "drmn/synth.hpp"

namespace drmn {

/// Eval-mode attention and channel gates of one image.
struct ImageAttention {
  ImageId image = 0;
  Tensor attention;  // A x R, rows are softmax distributions over regions
  Tensor gates;      // A x D, all ones when channel attention is off
  std::size_t height = 0, width = 0;  // reference grid
};

ImageAttention inspect_image(const Model& model, const PreparedData& data, ImageId image);

/// Binary PGM (P5, maxval 255), min-max scaled; a flat map is mid gray (128).
std::string heatmap_pgm(std::span<const double> row, std::size_t height, std::size_t width);
/// One line per attribute: attribute index then D gate values.
std::string gates_csv(const Tensor& gates);

/// Writes <dir>/att_<a>.pgm for every attribute and <dir>/gates.csv.
void write_attention(const ImageAttention& att, const std::filesystem::path& dir);

/// Region with the largest weight, lowest index on ties.
std::size_t attention_argmax(std::span<const double> row);

struct LocalizationResult {
  std::size_t pairs = 0;
  std::size_t hits = 0;
  double rate() const { return pairs ? static_cast<double>(hits) / static_cast<double>(pairs) : 0.0; }
};

/// Over every test image and every attribute its class has (semantic > 0),
/// counts how often the attention argmax sits on the planted cell.
LocalizationResult localization_hits(const Model& model, const PreparedData& data, const ZslDataset& ds,
                                     const SynthTruth& truth);

}  // namespace drmn

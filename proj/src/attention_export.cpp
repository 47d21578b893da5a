#include "drmn/attention_export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "binio.hpp"
#include "drmn/error.hpp"

namespace drmn {

ImageAttention inspect_image(const Model& model, const PreparedData& data, ImageId image) {
  if (image >= data.size()) {
    fail(Errc::domain, "image id " + std::to_string(image) + " out of range (" + std::to_string(data.size()) +
                           " images)");
  }
  const ImageId ids[1] = {image};
  Inference inf = model.infer(data.gather(ids));
  const auto& cfg = model.config();
  const auto& ref = cfg.level_shapes[cfg.ref_level];
  ImageAttention out;
  out.image = image;
  out.attention = std::move(inf.attention);
  out.gates = inf.eta.empty() ? Tensor::matrix(cfg.n_attributes, cfg.dim(), 1.0) : std::move(inf.eta);
  out.height = ref.height;
  out.width = ref.width;
  return out;
}

std::string heatmap_pgm(std::span<const double> row, std::size_t height, std::size_t width) {
  if (row.size() != height * width) fail(Errc::shape, "heatmap: row length does not match the grid");
  const auto [lo_it, hi_it] = std::minmax_element(row.begin(), row.end());
  const double lo = *lo_it, hi = *hi_it;
  const bool flat = hi - lo <= 1e-12 * std::max(1.0, std::abs(hi));
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (double v : row) {
    const long px = flat ? 128 : std::lround(255.0 * (v - lo) / (hi - lo));
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(px, 0L, 255L))));
  }
  return out;
}

std::string gates_csv(const Tensor& gates) {
  std::string out = "attribute";
  for (std::size_t d = 0; d < gates.cols(); ++d) out += ",c" + std::to_string(d);
  out += "\n";
  char buf[32];
  for (std::size_t a = 0; a < gates.rows(); ++a) {
    out += std::to_string(a);
    for (double v : gates.row(a)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void write_attention(const ImageAttention& att, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t a = 0; a < att.attention.rows(); ++a) {
    binio::write_file(dir / ("att_" + std::to_string(a) + ".pgm"),
                      heatmap_pgm(att.attention.row(a), att.height, att.width));
  }
  binio::write_file(dir / "gates.csv", gates_csv(att.gates));
}

std::size_t attention_argmax(std::span<const double> row) {
  if (row.empty()) fail(Errc::empty_input, "attention_argmax: empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

LocalizationResult localization_hits(const Model& model, const PreparedData& data, const ZslDataset& ds,
                                     const SynthTruth& truth) {
  if (truth.attribute_cells.size() != ds.n_attributes()) fail(Errc::shape, "truth does not match the dataset");
  LocalizationResult r;
  std::vector<ImageId> ids = ds.split.test_seen_ids;
  ids.insert(ids.end(), ds.split.test_unseen_ids.begin(), ds.split.test_unseen_ids.end());
  const std::size_t a_count = ds.n_attributes();
  for (std::size_t start = 0; start < ids.size(); start += 64) {
    const std::size_t end = std::min(ids.size(), start + 64);
    const std::span<const ImageId> chunk(ids.data() + start, end - start);
    const Inference inf = model.infer(data.gather(chunk));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const ClassId c = ds.labels[chunk[i]];
      for (std::size_t a = 0; a < a_count; ++a) {
        if (!(ds.semantics.z.at(c, a) > 0.0)) continue;
        ++r.pairs;
        r.hits += attention_argmax(inf.attention.row(i * a_count + a)) == truth.attribute_cells[a];
      }
    }
  }
  return r;
}

}  // namespace drmn

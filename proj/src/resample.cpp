#include "drmn/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drmn/error.hpp"

namespace drmn {

Tensor resample_matrix(std::size_t in, std::size_t out) {
  if (in == 0 || out == 0) fail(Errc::shape, "resample extents must be positive");
  Tensor m = Tensor::matrix(out, in);
  if (out == in) {
    for (std::size_t i = 0; i < in; ++i) m.at(i, i) = 1.0;
  } else if (out > in) {
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      const std::size_t hi = std::min(lo + 1, in - 1);
      const double frac = src - static_cast<double>(lo);
      m.at(o, lo) += 1.0 - frac;
      m.at(o, hi) += frac;
    }
  } else {
    if (in % out != 0) {
      fail(Errc::shape, "area downsampling needs an integer ratio, got " + std::to_string(in) +
                            " -> " + std::to_string(out));
    }
    const std::size_t k = in / out;
    for (std::size_t o = 0; o < out; ++o)
      for (std::size_t j = 0; j < k; ++j) m.at(o, o * k + j) = 1.0 / static_cast<double>(k);
  }
  return m;
}

std::vector<double> resample_map(std::span<const double> map, std::size_t channels, std::size_t h,
                                 std::size_t w, std::size_t out_h, std::size_t out_w) {
  if (map.size() != channels * h * w) fail(Errc::shape, "resample_map: data length mismatch");
  const Tensor mh = resample_matrix(h, out_h);
  const Tensor mw = resample_matrix(w, out_w);
  std::vector<double> tmp(channels * out_h * w, 0.0);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t o = 0; o < out_h; ++o)
      for (std::size_t i = 0; i < h; ++i) {
        const double k = mh.at(o, i);
        if (k == 0.0) continue;
        for (std::size_t x = 0; x < w; ++x) tmp[(c * out_h + o) * w + x] += k * map[(c * h + i) * w + x];
      }
  std::vector<double> out(channels * out_h * out_w, 0.0);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t o = 0; o < out_w; ++o)
        for (std::size_t x = 0; x < w; ++x) {
          const double k = mw.at(o, x);
          if (k == 0.0) continue;
          out[(c * out_h + y) * out_w + o] += k * tmp[(c * out_h + y) * w + x];
        }
  return out;
}

}  // namespace drmn

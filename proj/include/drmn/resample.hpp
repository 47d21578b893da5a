#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drmn/tensor.hpp"

namespace drmn {

/// 1-D resampling operator (out x in). Upsizing is bilinear with half-pixel
/// centres and edge clamping; downsizing is an area mean and requires
/// `in` to be a multiple of `out`.
Tensor resample_matrix(std::size_t in, std::size_t out);

/// Resamples a C x H x W map (row-major) to C x out_h x out_w, axis by axis.
std::vector<double> resample_map(std::span<const double> map, std::size_t channels, std::size_t h,
                                 std::size_t w, std::size_t out_h, std::size_t out_w);

}  // namespace drmn

#pragma once

#include <span>
#include <vector>

namespace drmn {

inline constexpr double kLayerNormEps = 1e-5;

/// Max-subtracted softmax. Throws numeric_domain on non-finite input.
std::vector<double> softmax(std::span<const double> x);
void softmax_inplace(std::span<double> x);

/// (x - mean) / sqrt(var + eps) * gain + bias, population variance.
std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> bias, double eps = kLayerNormEps);

/// layer_norm with unit gain and zero bias. A constant vector maps to zeros.
std::vector<double> standardize(std::span<const double> x, double eps = kLayerNormEps);

double sigmoid(double x);

}  // namespace drmn

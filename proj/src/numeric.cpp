#include "drmn/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drmn/error.hpp"

namespace drmn {

void softmax_inplace(std::span<double> x) {
  if (x.empty()) fail(Errc::empty_input, "softmax of an empty vector");
  double mx = x[0];
  for (double v : x) {
    if (!std::isfinite(v)) fail(Errc::numeric_domain, "softmax input is not finite");
    mx = std::max(mx, v);
  }
  double sum = 0.0;
  for (double& v : x) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : x) v /= sum;
}

std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  softmax_inplace(out);
  return out;
}

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               std::span<const double> bias, double eps) {
  if (gain.size() != x.size() || bias.size() != x.size()) {
    fail(Errc::shape, "layer_norm: gain/bias length " + std::to_string(gain.size()) + "/" +
                          std::to_string(bias.size()) + " vs input " + std::to_string(x.size()));
  }
  if (x.empty()) fail(Errc::empty_input, "layer_norm of an empty vector");
  if (!(eps > 0.0)) fail(Errc::domain, "layer_norm eps must be positive");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv * gain[i] + bias[i];
  return out;
}

std::vector<double> standardize(std::span<const double> x, double eps) {
  const std::vector<double> ones(x.size(), 1.0);
  const std::vector<double> zeros(x.size(), 0.0);
  return layer_norm(x, ones, zeros, eps);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace drmn

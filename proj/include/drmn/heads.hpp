#pragma once

#include <span>

#include "drmn/autograd.hpp"
#include "drmn/dataset.hpp"
#include "drmn/parameters.hpp"
#include "drmn/rng.hpp"

// Attribute scoring, the hyperspherical (scaled cosine) classifier and the
// global classification branch.
namespace drmn::heads {

/// Adds heads.w4 (D x D), heads.global.weight (C x C_last), heads.global.bias (C).
void init_params(ParameterSet& params, std::size_t dim, std::size_t last_channels, std::size_t n_classes, Rng& rng);

/// e(i, a) = p_a^T W4 h(i, a); h is (B*A) x D, result B x A.
Var attribute_scores(Tape& t, Var prototypes, Var h, Var w4, std::size_t batch);
/// o = gamma^2 * cos(e_i, z^c); `z_unit` holds l2-normalised class rows.
Var hyperspherical_logits(Tape& t, Var e, Var z_unit, double gamma);
/// g = W pooled^T + b; pooled is B x C_last.
Var global_logits(Tape& t, Var pooled, Var weight, Var bias);

/// Rows of Z scaled to unit length. Zero rows raise degenerate_score.
Tensor unit_rows(const Tensor& z);
/// Spatial mean of a C x H x W map.
std::vector<double> global_average_pool(std::span<const float> map, const LevelShape& shape);

// Single-image plain forms.
Tensor attribute_scores(const Tensor& prototypes, const Tensor& h, const Tensor& w4);
Tensor hyperspherical_logits(const Tensor& e, const Tensor& z, double gamma);
Tensor global_logits(std::span<const float> last_level, const LevelShape& shape, const Tensor& weight,
                     const Tensor& bias);

}  // namespace drmn::heads

#include "drmn/heads.hpp"

#include <cmath>

#include "drmn/error.hpp"
#include "drmn/ops.hpp"

namespace drmn::heads {

void init_params(ParameterSet& params, std::size_t dim, std::size_t last_channels, std::size_t n_classes,
                 Rng& rng) {
  Tensor w4 = Tensor::matrix(dim, dim);
  const double b4 = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& v : w4.storage()) v = rng.uniform(-b4, b4);
  params.add("heads.w4", std::move(w4));
  Tensor wg = Tensor::matrix(n_classes, last_channels);
  const double bg = 1.0 / std::sqrt(static_cast<double>(last_channels));
  for (auto& v : wg.storage()) v = rng.uniform(-bg, bg);
  params.add("heads.global.weight", std::move(wg));
  params.add("heads.global.bias", Tensor({n_classes}, 0.0));
}

Var attribute_scores(Tape& t, Var prototypes, Var h, Var w4, std::size_t batch) {
  const Tensor& p = t.value(prototypes);
  const Tensor& hv = t.value(h);
  if (hv.rows() != batch * p.rows() || hv.cols() != t.value(w4).cols() || p.cols() != t.value(w4).rows()) {
    fail(Errc::shape, "attribute_scores: shapes " + shape_str(p.shape()) + ", " + shape_str(hv.shape()) + ", " +
                          shape_str(t.value(w4).shape()) + " disagree");
  }
  const std::size_t n_attr = p.rows();
  const Var embedded = ops::matmul(t, prototypes, w4);  // row a = p_a^T W4
  const Var prod = ops::mul(t, h, ops::tile_rows(t, embedded, batch));
  return ops::reshape(t, ops::row_sum(t, prod), {batch, n_attr});
}

Var hyperspherical_logits(Tape& t, Var e, Var z_unit, double gamma) {
  if (!(gamma > 0.0)) fail(Errc::domain, "gamma must be positive");
  if (t.value(e).cols() != t.value(z_unit).cols()) {
    fail(Errc::shape, "hyperspherical_logits: score width differs from attribute count");
  }
  const Var e_unit = ops::l2_normalize_rows(t, e);
  return ops::scale(t, ops::matmul_nt(t, e_unit, z_unit), gamma * gamma);
}

Var global_logits(Tape& t, Var pooled, Var weight, Var bias) {
  if (t.value(pooled).cols() != t.value(weight).cols()) {
    fail(Errc::shape, "global_logits: pooled width " + std::to_string(t.value(pooled).cols()) +
                          " vs weight " + shape_str(t.value(weight).shape()));
  }
  return ops::add_row_bias(t, ops::matmul_nt(t, pooled, weight), bias);
}

Tensor unit_rows(const Tensor& z) {
  Tensor out = z.rank() == 2 ? z : z.reshaped({z.rows(), z.cols()});
  for (std::size_t c = 0; c < out.rows(); ++c) {
    double s = 0.0;
    for (double v : out.row(c)) s += v * v;
    if (!(s > 0.0)) fail(Errc::degenerate_score, "class semantic row " + std::to_string(c) + " has zero norm");
    const double n = std::sqrt(s);
    for (double& v : out.row(c)) v /= n;
  }
  return out;
}

std::vector<double> global_average_pool(std::span<const float> map, const LevelShape& shape) {
  if (map.size() != shape.numel()) fail(Errc::shape, "global_average_pool: map size mismatch");
  const std::size_t r = shape.regions();
  std::vector<double> out(shape.channels, 0.0);
  for (std::size_t c = 0; c < shape.channels; ++c) {
    for (std::size_t k = 0; k < r; ++k) out[c] += map[c * r + k];
    out[c] /= static_cast<double>(r);
  }
  return out;
}

Tensor attribute_scores(const Tensor& prototypes, const Tensor& h, const Tensor& w4) {
  Tape t;
  return t.value(attribute_scores(t, t.constant(prototypes), t.constant(h), t.constant(w4), 1));
}

Tensor hyperspherical_logits(const Tensor& e, const Tensor& z, double gamma) {
  Tape t;
  const Var ev = t.constant(e.rank() == 2 ? e : e.reshaped({1, e.size()}));
  return t.value(hyperspherical_logits(t, ev, t.constant(unit_rows(z)), gamma));
}

Tensor global_logits(std::span<const float> last_level, const LevelShape& shape, const Tensor& weight,
                     const Tensor& bias) {
  std::vector<double> pooled = global_average_pool(last_level, shape);
  const std::size_t width = pooled.size();
  Tape t;
  const Var pv = t.constant(Tensor({1, width}, std::move(pooled)));
  return t.value(global_logits(t, pv, t.constant(weight), t.constant(bias)));
}

}  // namespace drmn::heads

#include "drmn/sit.hpp"

#include <cmath>

#include "drmn/error.hpp"
#include "drmn/ops.hpp"

namespace drmn::sit {

namespace {

Tensor uniform_matrix(std::size_t in, std::size_t out, Rng& rng) {
  Tensor w = Tensor::matrix(in, out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : w.storage()) v = rng.uniform(-bound, bound);
  return w;
}

Var affine(Tape& t, Var x, Var w, Var b) { return ops::add_row_bias(t, ops::matmul(t, x, w), b); }

}  // namespace

void init_params(ParameterSet& params, std::size_t dim, const SitConfig& cfg, Rng& rng) {
  if (cfg.heads == 0 || dim % cfg.heads != 0) {
    fail(Errc::config, "feature dim " + std::to_string(dim) + " is not divisible by " +
                           std::to_string(cfg.heads) + " heads");
  }
  if (cfg.mlp_ratio == 0) fail(Errc::config, "mlp ratio must be positive");
  for (const char* name : {"q", "k", "v", "o"}) {
    params.add(std::string("sit.w") + name, uniform_matrix(dim, dim, rng));
    params.add(std::string("sit.b") + name, Tensor({dim}, 0.0));
  }
  const std::size_t hidden = dim * cfg.mlp_ratio;
  params.add("sit.mlp.w1", uniform_matrix(dim, hidden, rng));
  params.add("sit.mlp.b1", Tensor({hidden}, 0.0));
  params.add("sit.mlp.w2", uniform_matrix(hidden, dim, rng));
  params.add("sit.mlp.b2", Tensor({dim}, 0.0));
  params.add("sit.ln1.gain", Tensor({dim}, 1.0));
  params.add("sit.ln1.bias", Tensor({dim}, 0.0));
  params.add("sit.ln2.gain", Tensor({dim}, 1.0));
  params.add("sit.ln2.bias", Tensor({dim}, 0.0));
}

SitVars bind(const BoundParameters& p) {
  return SitVars{p["sit.wq"],     p["sit.bq"],     p["sit.wk"],      p["sit.bk"],      p["sit.wv"],
                 p["sit.bv"],     p["sit.wo"],     p["sit.bo"],      p["sit.mlp.w1"],  p["sit.mlp.b1"],
                 p["sit.mlp.w2"], p["sit.mlp.b2"], p["sit.ln1.gain"], p["sit.ln1.bias"], p["sit.ln2.gain"],
                 p["sit.ln2.bias"]};
}

SitVars bind_constants(Tape& t, const ParameterSet& p) {
  auto c = [&](const char* name) { return t.constant(p.get(name)); };
  return SitVars{c("sit.wq"),     c("sit.bq"),     c("sit.wk"),       c("sit.bk"),       c("sit.wv"),
                 c("sit.bv"),     c("sit.wo"),     c("sit.bo"),       c("sit.mlp.w1"),   c("sit.mlp.b1"),
                 c("sit.mlp.w2"), c("sit.mlp.b2"), c("sit.ln1.gain"), c("sit.ln1.bias"), c("sit.ln2.gain"),
                 c("sit.ln2.bias")};
}

Var mhsa(Tape& t, Var x, const SitVars& w, std::size_t heads) {
  const std::size_t d = t.value(x).cols();
  if (t.value(w.wq).rows() != d) fail(Errc::shape, "mhsa: input width differs from projection size");
  if (heads == 0 || d % heads != 0) fail(Errc::shape, "mhsa: width not divisible by head count");
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Var q = affine(t, x, w.wq, w.bq);
  const Var k = affine(t, x, w.wk, w.bk);
  const Var v = affine(t, x, w.wv, w.bv);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Var qh = ops::slice_cols(t, q, h * dh, (h + 1) * dh);
    const Var kh = ops::slice_cols(t, k, h * dh, (h + 1) * dh);
    const Var vh = ops::slice_cols(t, v, h * dh, (h + 1) * dh);
    const Var att = ops::softmax_rows(t, ops::scale(t, ops::matmul_nt(t, qh, kh), inv_sqrt));
    outs.push_back(ops::matmul(t, att, vh));
  }
  const Var merged = heads == 1 ? outs[0] : ops::concat_cols(t, outs);
  return affine(t, merged, w.wo, w.bo);
}

Var encoder_layer(Tape& t, Var x, const SitVars& w, std::size_t heads) {
  const Var h1 = ops::layer_norm_rows(t, ops::add(t, mhsa(t, x, w, heads), x), w.ln1_gain, w.ln1_bias);
  const Var hidden = ops::relu(t, affine(t, h1, w.mlp_w1, w.mlp_b1));
  const Var mlp = affine(t, hidden, w.mlp_w2, w.mlp_b2);
  return ops::layer_norm_rows(t, ops::add(t, mlp, h1), w.ln2_gain, w.ln2_bias);
}

Tensor mhsa(const Tensor& x, const ParameterSet& params, std::size_t heads) {
  Tape t;
  const SitVars w = bind_constants(t, params);
  return t.value(mhsa(t, t.constant(x), w, heads));
}

Tensor sit_forward(const Tensor& batch, const ParameterSet& params, const SitConfig& cfg, Mode mode) {
  if (batch.rank() != 3) fail(Errc::shape, "sit_forward expects a B x A x D batch");
  if (mode == Mode::eval) return batch;
  const auto& s = batch.shape();
  Tape t;
  const SitVars w = bind_constants(t, params);
  const Var flat = t.constant(batch.reshaped({s[0] * s[1], s[2]}));
  return t.value(encoder_layer(t, flat, w, cfg.heads)).reshaped(s);
}

}  // namespace drmn::sit

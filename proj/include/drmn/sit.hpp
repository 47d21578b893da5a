#pragma once

#include "drmn/autograd.hpp"
#include "drmn/parameters.hpp"
#include "drmn/rng.hpp"

// Semantic Interaction Transformer: one post-norm encoder layer over the
// flattened (B*A) x D batch of semantic features, used only in training.
namespace drmn::sit {

struct SitConfig {
  std::size_t heads = 4;
  std::size_t mlp_ratio = 2;
};

enum class Mode { train, eval };

/// Adds sit.{wq,bq,wk,bk,wv,bv,wo,bo}, sit.mlp.{w1,b1,w2,b2},
/// sit.ln1.{gain,bias}, sit.ln2.{gain,bias}. Projections are stored
/// input-major (D x D_out); head h owns output columns [h*D/n, (h+1)*D/n).
void init_params(ParameterSet& params, std::size_t dim, const SitConfig& cfg, Rng& rng);

struct SitVars {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
  Var mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  Var ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};
SitVars bind(const BoundParameters& p);
SitVars bind_constants(Tape& t, const ParameterSet& p);

/// Multi-head scaled dot-product self-attention, S x D -> S x D.
Var mhsa(Tape& t, Var x, const SitVars& w, std::size_t heads);
/// H' = LN(MHSA(H) + H); out = LN(MLP(H') + H').
Var encoder_layer(Tape& t, Var x, const SitVars& w, std::size_t heads);

/// Plain forms. `batch` is B x A x D; eval mode returns it unchanged.
Tensor mhsa(const Tensor& x, const ParameterSet& params, std::size_t heads);
Tensor sit_forward(const Tensor& batch, const ParameterSet& params, const SitConfig& cfg, Mode mode);

}  // namespace drmn::sit

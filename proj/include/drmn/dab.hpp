#pragma once

#include <span>
#include <string>
#include <vector>

#include "drmn/autograd.hpp"
#include "drmn/dataset.hpp"
#include "drmn/parameters.hpp"
#include "drmn/rng.hpp"

// Dual Attention Block: multi-level fusion, region-attribute spatial
// attention and attribute-guided channel gating.
//
// Batched layout: a batch of B images travels as stacked per-image blocks.
// Region features are (B*R) x D with row (i, r); attribute quantities are
// (B*A) x D with row (i, a).
namespace drmn::dab {

struct FusionOptions {
  bool multi_level = true;  // false: v is the raw reference level alone
  bool residual = true;     // identity term on the raw reference level
};

/// Parameter-free fusion inputs: every level resampled to the reference
/// grid and laid out as region rows.
struct FusionInputs {
  std::size_t batch = 0;
  std::size_t regions = 0;
  Tensor ref;                  // (B*R) x C_ref, raw reference map
  std::vector<Tensor> levels;  // per level: (B*R) x C_l
};

/// Resampled region rows for one image, one entry per level.
std::vector<Tensor> image_level_regions(const MultiLevelFeatures& features, std::size_t image);
/// Same, from raw C x H x W maps.
std::vector<Tensor> level_regions_from_maps(const std::vector<std::vector<double>>& maps,
                                            const std::vector<LevelShape>& shapes, std::size_t ref_level);
/// Stacks per-image region rows into a batch.
FusionInputs stack_fusion_inputs(const std::vector<const std::vector<Tensor>*>& images, std::size_t ref_level);

struct Dims {
  std::vector<LevelShape> level_shapes;
  std::size_t ref_level = 0;
  std::size_t n_attributes = 0;
  std::size_t reduction = 4;

  std::size_t dim() const { return level_shapes.at(ref_level).channels; }
};

/// Adds dab.proj.<l>, dab.prototypes, dab.w1, dab.gate.w2, dab.gate.w3.
void init_params(ParameterSet& params, const Dims& dims, Rng& rng);
std::string proj_name(std::size_t level);

/// v = f_ref + sum_l f_l Proj_l^T   -> (B*R) x D
Var fuse_levels(Tape& t, const FusionInputs& in, const std::vector<Var>& proj, const FusionOptions& opt);

struct SpatialOut {
  Var attention;  // omega, (B*A) x R, rows sum to 1
  Var features;   // k, (B*A) x D
};
SpatialOut spatial_attention(Tape& t, Var prototypes, Var regions, Var w1, std::size_t batch);

/// q(i, a) = norm(p_a) + norm(mean_r v_i^r)  -> (B*A) x D
Var channel_descriptor(Tape& t, Var prototypes, Var regions, std::size_t batch);
/// eta = sigmoid(relu(q W2^T) W3^T)
Var channel_gate(Tape& t, Var descriptor, Var w2, Var w3);
/// h = k * eta
Var apply_gate(Tape& t, Var k, Var eta);

// Single-image convenience forms over plain tensors.

/// Region view of v (R x D).
struct FusedFeatureMap {
  Tensor regions;
  std::size_t height = 0;
  std::size_t width = 0;
};
FusedFeatureMap fuse_levels(const std::vector<std::vector<double>>& maps, const std::vector<LevelShape>& shapes,
                            std::size_t ref_level, const std::vector<Tensor>& proj, const FusionOptions& opt = {});

struct AttentionResult {
  Tensor attention;  // A x R
  Tensor features;   // A x D
};
AttentionResult spatial_attention(const Tensor& prototypes, const FusedFeatureMap& v, const Tensor& w1);
Tensor channel_descriptor(const Tensor& prototypes, const FusedFeatureMap& v);
Tensor channel_gate(const Tensor& descriptor, const Tensor& w2, const Tensor& w3);
Tensor apply_gate(const Tensor& k, const Tensor& eta);

}  // namespace drmn::dab

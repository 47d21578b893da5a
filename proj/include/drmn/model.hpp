#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "drmn/dab.hpp"
#include "drmn/dataset.hpp"
#include "drmn/heads.hpp"
#include "drmn/parameters.hpp"
#include "drmn/sit.hpp"

namespace drmn {

struct ModelConfig {
  std::vector<LevelShape> level_shapes;
  std::size_t ref_level = 0;
  std::size_t n_attributes = 0;
  std::size_t n_classes = 0;
  std::size_t reduction = 4;
  sit::SitConfig sit;
  double gamma = 5.0;
  // ablation toggles
  bool mff = true;
  bool aca = true;
  bool use_sit = true;
  bool global_branch = true;
  bool fusion_residual = true;

  std::size_t dim() const { return level_shapes.at(ref_level).channels; }
  std::size_t regions() const { return level_shapes.at(ref_level).regions(); }
  void check() const;
  /// Shapes taken from the dataset, everything else default.
  static ModelConfig for_dataset(const ZslDataset& ds);
  bool same_shapes(const ModelConfig& other) const;
};

struct BatchInputs {
  dab::FusionInputs fusion;
  Tensor pooled_last;  // B x C_last, global average pool of the last level
  std::size_t batch() const { return fusion.batch; }
};

/// Parameter-free per-image inputs (resampled levels, pooled last level),
/// computed once per dataset.
class PreparedData {
 public:
  explicit PreparedData(const ZslDataset& ds);
  BatchInputs gather(std::span<const ImageId> ids) const;
  std::size_t size() const noexcept { return regions_.size(); }

 private:
  std::size_t ref_level_ = 0;
  std::vector<std::vector<Tensor>> regions_;
  std::vector<std::vector<double>> pooled_last_;
};

/// Recorded forward pass. Vars that a configuration skips stay invalid.
struct ForwardVars {
  Var regions;    // v, (B*R) x D
  Var attention;  // omega, (B*A) x R
  Var k;          // (B*A) x D
  Var eta;        // (B*A) x D, invalid without channel attention
  Var h;          // (B*A) x D
  Var e_pre, o_pre;
  Var h_post, e_post, o_post;  // only in train mode with SIT enabled
  Var g;                       // only with the global branch
};

struct Inference {
  Tensor o;          // B x C
  Tensor g;          // B x C, empty without the global branch
  Tensor attention;  // (B*A) x R
  Tensor eta;        // (B*A) x D, empty without channel attention
};

class Model {
 public:
  /// Fresh model, parameters drawn from Rng(seed).
  Model(ModelConfig cfg, const Tensor& class_semantics, std::uint64_t seed);
  /// Model around existing parameters (checkpoint restore).
  Model(ModelConfig cfg, const Tensor& class_semantics, ParameterSet params);

  const ModelConfig& config() const noexcept { return cfg_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  const Tensor& unit_semantics() const noexcept { return z_unit_; }

  ForwardVars forward(Tape& t, const BoundParameters& p, const BatchInputs& in, sit::Mode mode) const;
  /// Eval-mode forward (SIT removed) without gradient bookkeeping.
  Inference infer(const BatchInputs& in) const;

  static ParameterSet init_params(const ModelConfig& cfg, std::uint64_t seed);

 private:
  ModelConfig cfg_;
  ParameterSet params_;
  Tensor z_unit_;
};

}  // namespace drmn

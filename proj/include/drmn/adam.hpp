#pragma once

#include <cstdint>
#include <vector>

#include "drmn/parameters.hpp"
#include "drmn/tensor.hpp"

namespace drmn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments for one parameter tensor.
struct AdamState {
  Tensor m;
  Tensor v;
  std::uint64_t t = 0;
  AdamHyper hyper;

  static AdamState for_param(const Tensor& param, AdamHyper hyper = {});
};

/// One bias-corrected Adam update of `param` in place.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr);

/// Step decay: base_lr * decay_factor^floor(epoch / decay_every), epochs 0-based.
struct LrSchedule {
  double base_lr = 1e-3;
  int decay_every = 10;
  double decay_factor = 0.5;

  double lr(int epoch) const;
};

/// Adam over a whole ParameterSet, states aligned with set order.
class Adam {
 public:
  Adam() = default;
  Adam(const ParameterSet& params, AdamHyper hyper);
  void step(ParameterSet& params, const ParameterSet& grads, double lr);

  std::vector<AdamState>& states() noexcept { return states_; }
  const std::vector<AdamState>& states() const noexcept { return states_; }

 private:
  std::vector<AdamState> states_;
};

}  // namespace drmn

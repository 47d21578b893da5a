#include "drmn/adam.hpp"

#include <cmath>

#include "drmn/error.hpp"

namespace drmn {

AdamState AdamState::for_param(const Tensor& param, AdamHyper hyper) {
  return AdamState{Tensor(param.shape(), 0.0), Tensor(param.shape(), 0.0), 0, hyper};
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& s, double lr) {
  require_same_shape(param, grad, "adam_step");
  require_same_shape(param, s.m, "adam_step (first moment)");
  require_same_shape(param, s.v, "adam_step (second moment)");
  if (!(lr >= 0.0)) fail(Errc::domain, "adam_step: learning rate must be non-negative");
  if (!grad.all_finite()) fail(Errc::numeric_domain, "adam_step: non-finite gradient");

  s.t += 1;
  const double b1 = s.hyper.beta1, b2 = s.hyper.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    s.m[i] = b1 * s.m[i] + (1.0 - b1) * g;
    s.v[i] = b2 * s.v[i] + (1.0 - b2) * g * g;
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + s.hyper.eps);
  }
}

double LrSchedule::lr(int epoch) const {
  if (decay_every <= 0) fail(Errc::config, "decay_every must be positive");
  if (epoch < 0) fail(Errc::domain, "epoch must be non-negative");
  return base_lr * std::pow(decay_factor, epoch / decay_every);
}

Adam::Adam(const ParameterSet& params, AdamHyper hyper) {
  states_.reserve(params.size());
  for (const auto& p : params) states_.push_back(AdamState::for_param(p.value, hyper));
}

void Adam::step(ParameterSet& params, const ParameterSet& grads, double lr) {
  if (params.size() != states_.size() || grads.size() != states_.size()) {
    fail(Errc::shape, "Adam::step: parameter/gradient/state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) adam_step(params[i].value, grads[i].value, states_[i], lr);
}

}  // namespace drmn

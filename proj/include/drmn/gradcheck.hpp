#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drmn/parameters.hpp"

namespace drmn {

/// Evaluates the loss at `params`. When `grads` is non-null it must also be
/// filled with analytic gradients (same names and shapes as `params`).
using LossFn = std::function<double(const ParameterSet& params, ParameterSet* grads)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const;
  const GradCheckEntry& worst() const;
  bool passed(double tol) const { return max_rel_error() < tol; }
  std::string to_string() const;
};

/// Compares analytic gradients against central differences. Relative error
/// per entry is |a - n| / max(1, |a|, |n|). Raises determinism if two plain
/// evaluations at the same point disagree bitwise.
GradCheckReport grad_check(const LossFn& loss_fn, const ParameterSet& params, double eps = 1e-6);

}  // namespace drmn

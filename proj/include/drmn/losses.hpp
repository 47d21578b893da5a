#pragma once

#include <optional>
#include <span>

#include "drmn/autograd.hpp"
#include "drmn/dataset.hpp"

namespace drmn {

/// Attribute-branch loss with self-calibration, averaged over the batch:
///   CE of o restricted to seen classes against the (seen) label
///   - lambda_sc * sum_{u unseen} log softmax_C(o + bonus * 1[unseen])_u
/// Labels outside the seen set raise a domain error.
Var loss_ac(Tape& t, Var o, std::span<const ClassId> labels, const Split& split, double lambda_sc,
            double unseen_bonus = 1.0);
double loss_ac(const Tensor& o, std::span<const ClassId> labels, const Split& split, double lambda_sc,
               double unseen_bonus = 1.0);

/// Global-branch cross-entropy over all classes, or over seen classes only
/// when `seen_only` is set.
Var loss_gc(Tape& t, Var g, std::span<const ClassId> labels, const Split* seen_only = nullptr);
double loss_gc(const Tensor& g, std::span<const ClassId> labels, const Split* seen_only = nullptr);

struct LossMix {
  double lambda_gc = 0.6;
  double sit_mix = 0.5;  // weight of the post-SIT attribute loss
  bool sit = true;
  bool global_branch = true;
};

/// L_AC = mix * post + (1 - mix) * pre (pre alone without SIT);
/// total = L_AC + lambda_gc * L_GC (GC term dropped without the global branch).
double total_loss(double l_ac_pre, std::optional<double> l_ac_post, std::optional<double> l_gc, const LossMix& mix);
Var total_loss(Tape& t, Var l_ac_pre, Var l_ac_post, Var l_gc, const LossMix& mix);

}  // namespace drmn

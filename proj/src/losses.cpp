#include "drmn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "drmn/error.hpp"
#include "drmn/ops.hpp"

namespace drmn {

namespace {

// log-sum-exp over the selected entries of one row.
double log_sum_exp(std::span<const double> row, const std::vector<std::size_t>& idx,
                   const std::vector<double>& offset) {
  double mx = -INFINITY;
  for (std::size_t c : idx) mx = std::max(mx, row[c] + offset[c]);
  double s = 0.0;
  for (std::size_t c : idx) s += std::exp(row[c] + offset[c] - mx);
  return mx + std::log(s);
}

void check_batch(const Tensor& x, std::span<const ClassId> labels, const char* what) {
  if (x.rank() != 2 || x.rows() != labels.size()) {
    fail(Errc::shape, std::string(what) + ": logits " + shape_str(x.shape()) + " vs " +
                          std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) fail(Errc::empty_input, std::string(what) + ": empty batch");
}

struct AcTerms {
  double value;
  Tensor grad;  // d(loss)/d(o)
};

AcTerms ac_terms(const Tensor& o, std::span<const ClassId> labels, const Split& split, double lambda_sc,
                 double bonus) {
  check_batch(o, labels, "loss_ac");
  const std::size_t n = o.rows(), c_all = o.cols();
  std::vector<std::size_t> seen, unseen, all(c_all);
  for (ClassId c : split.seen_classes) {
    if (c >= c_all) fail(Errc::domain, "loss_ac: seen class out of range");
    seen.push_back(c);
  }
  for (ClassId c : split.unseen_classes) {
    if (c >= c_all) fail(Errc::domain, "loss_ac: unseen class out of range");
    unseen.push_back(c);
  }
  for (std::size_t c = 0; c < c_all; ++c) all[c] = c;
  const std::vector<double> zero(c_all, 0.0);
  std::vector<double> calib(c_all, 0.0);
  for (std::size_t u : unseen) calib[u] = bonus;

  const double inv_n = 1.0 / static_cast<double>(n);
  AcTerms out{0.0, Tensor::matrix(n, c_all)};
  for (std::size_t i = 0; i < n; ++i) {
    const ClassId y = labels[i];
    if (!split.is_seen(y)) fail(Errc::domain, "loss_ac: label " + std::to_string(y) + " is not a seen class");
    const auto row = o.row(i);
    auto grow = out.grad.row(i);

    const double lse_seen = log_sum_exp(row, seen, zero);
    out.value += inv_n * (lse_seen - row[y]);
    for (std::size_t c : seen) grow[c] += inv_n * std::exp(row[c] - lse_seen);
    grow[y] -= inv_n;

    if (lambda_sc != 0.0 && !unseen.empty()) {
      const double lse_all = log_sum_exp(row, all, calib);
      double term = 0.0;
      for (std::size_t u : unseen) term += row[u] + calib[u] - lse_all;
      out.value -= lambda_sc * inv_n * term;
      const double k = static_cast<double>(unseen.size());
      for (std::size_t c = 0; c < c_all; ++c) {
        const double p = std::exp(row[c] + calib[c] - lse_all);
        grow[c] += lambda_sc * inv_n * k * p;
      }
      for (std::size_t u : unseen) grow[u] -= lambda_sc * inv_n;
    }
  }
  return out;
}

AcTerms gc_terms(const Tensor& g, std::span<const ClassId> labels, const Split* seen_only) {
  check_batch(g, labels, "loss_gc");
  const std::size_t n = g.rows(), c_all = g.cols();
  std::vector<std::size_t> classes;
  if (seen_only) {
    for (ClassId c : seen_only->seen_classes) classes.push_back(c);
  } else {
    for (std::size_t c = 0; c < c_all; ++c) classes.push_back(c);
  }
  const std::vector<double> zero(c_all, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  AcTerms out{0.0, Tensor::matrix(n, c_all)};
  for (std::size_t i = 0; i < n; ++i) {
    const ClassId y = labels[i];
    if (y >= c_all || (seen_only && !seen_only->is_seen(y))) {
      fail(Errc::domain, "loss_gc: label " + std::to_string(y) + " out of range");
    }
    const auto row = g.row(i);
    const double lse = log_sum_exp(row, classes, zero);
    out.value += inv_n * (lse - row[y]);
    auto grow = out.grad.row(i);
    for (std::size_t c : classes) grow[c] += inv_n * std::exp(row[c] - lse);
    grow[y] -= inv_n;
  }
  return out;
}

Var push_loss(Tape& t, const char* name, Var x, AcTerms terms) {
  Tensor grad = std::move(terms.grad);
  return t.push(name, Tensor({1}, terms.value), {x}, [x, grad = std::move(grad)](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor gx = grad;
    for (auto& v : gx.storage()) v *= g[0];
    tp.accumulate(x, gx);
  });
}

}  // namespace

Var loss_ac(Tape& t, Var o, std::span<const ClassId> labels, const Split& split, double lambda_sc, double bonus) {
  return push_loss(t, "loss_ac", o, ac_terms(t.value(o), labels, split, lambda_sc, bonus));
}

double loss_ac(const Tensor& o, std::span<const ClassId> labels, const Split& split, double lambda_sc, double bonus) {
  return ac_terms(o, labels, split, lambda_sc, bonus).value;
}

Var loss_gc(Tape& t, Var g, std::span<const ClassId> labels, const Split* seen_only) {
  return push_loss(t, "loss_gc", g, gc_terms(t.value(g), labels, seen_only));
}

double loss_gc(const Tensor& g, std::span<const ClassId> labels, const Split* seen_only) {
  return gc_terms(g, labels, seen_only).value;
}

double total_loss(double l_ac_pre, std::optional<double> l_ac_post, std::optional<double> l_gc, const LossMix& mix) {
  double ac = l_ac_pre;
  if (mix.sit && l_ac_post) ac = mix.sit_mix * *l_ac_post + (1.0 - mix.sit_mix) * l_ac_pre;
  double total = ac;
  if (mix.global_branch && l_gc) total += mix.lambda_gc * *l_gc;
  return total;
}

Var total_loss(Tape& t, Var l_ac_pre, Var l_ac_post, Var l_gc, const LossMix& mix) {
  std::vector<Var> xs{l_ac_pre};
  std::vector<double> ws{1.0};
  if (mix.sit && l_ac_post.valid()) {
    ws[0] = 1.0 - mix.sit_mix;
    xs.push_back(l_ac_post);
    ws.push_back(mix.sit_mix);
  }
  if (mix.global_branch && l_gc.valid()) {
    xs.push_back(l_gc);
    ws.push_back(mix.lambda_gc);
  }
  return ops::linear_combination(t, xs, ws);
}

}  // namespace drmn

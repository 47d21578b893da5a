#include "drmn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "drmn/error.hpp"

namespace drmn {

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

const GradCheckEntry& GradCheckReport::worst() const {
  if (entries.empty()) fail(Errc::empty_input, "empty gradient check report");
  return *std::max_element(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.max_rel_error < b.max_rel_error;
  });
}

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  char buf[256];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%-28s max_rel_err=%.3e  (index %zu: analytic %.9e, numeric %.9e)\n",
                  e.name.c_str(), e.max_rel_error, e.worst_index, e.analytic, e.numeric);
    os << buf;
  }
  return os.str();
}

GradCheckReport grad_check(const LossFn& loss_fn, const ParameterSet& params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) fail(Errc::domain, "grad_check eps must lie in [1e-7, 1e-3]");

  const double f0 = loss_fn(params, nullptr);
  const double f1 = loss_fn(params, nullptr);
  if (std::memcmp(&f0, &f1, sizeof f0) != 0) {
    fail(Errc::determinism, "loss function is not deterministic");
  }

  ParameterSet analytic = params.zeros_like();
  loss_fn(params, &analytic);

  GradCheckReport report;
  ParameterSet probe = params;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    GradCheckEntry entry{probe[p].name};
    Tensor& w = probe[p].value;
    const Tensor& ga = analytic[p].value;
    if (ga.shape() != w.shape()) fail(Errc::shape, "analytic gradient shape mismatch for " + entry.name);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + eps;
      const double fp = loss_fn(probe, nullptr);
      w[i] = orig - eps;
      const double fm = loss_fn(probe, nullptr);
      w[i] = orig;
      const double num = (fp - fm) / (2.0 * eps);
      const double a = ga[i];
      const double rel = std::abs(a - num) / std::max({1.0, std::abs(a), std::abs(num)});
      if (rel > entry.max_rel_error || i == 0) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.analytic = a;
        entry.numeric = num;
      }
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace drmn

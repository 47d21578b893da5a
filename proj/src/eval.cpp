#include "drmn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "drmn/error.hpp"
#include "drmn/numeric.hpp"

namespace drmn {

void EnsembleConfig::check() const {
  if (!(beta >= 0.0 && beta <= 1.0)) fail(Errc::config, "ensemble beta must lie in [0, 1]");
  if (!std::isfinite(unseen_bonus)) fail(Errc::config, "unseen bonus must be finite");
}

namespace {

// First index of the maximum, i.e. ties resolve to the lowest class id.
std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

ClassId czsl_predict(std::span<const double> o, std::span<const ClassId> unseen) {
  if (unseen.empty()) fail(Errc::domain, "czsl_predict: empty unseen class set");
  ClassId best = 0;
  bool have = false;
  for (ClassId c : unseen) {
    if (c >= o.size()) fail(Errc::shape, "czsl_predict: class id beyond logits");
    if (!have || o[c] > o[best] || (o[c] == o[best] && c < best)) {
      best = c;
      have = true;
    }
  }
  return best;
}

ClassId calibrated_predict(std::span<const double> o, const Split& split, double unseen_bonus) {
  std::vector<double> shifted(o.begin(), o.end());
  for (ClassId u : split.unseen_classes) {
    if (u >= shifted.size()) fail(Errc::shape, "calibrated_predict: class id beyond logits");
    shifted[u] += unseen_bonus;
  }
  return static_cast<ClassId>(argmax(shifted));
}

ClassId ensemble_predict(std::span<const double> o, std::span<const double> g, const Split& split,
                         const EnsembleConfig& cfg) {
  if (o.size() != g.size()) fail(Errc::shape, "ensemble_predict: branch widths differ");
  const ClassId first = calibrated_predict(o, split, cfg.unseen_bonus);
  if (split.is_unseen(first)) return first;
  const std::vector<double> po = softmax(o);
  const std::vector<double> pg = softmax(g);
  std::vector<double> blend(o.size());
  for (std::size_t c = 0; c < o.size(); ++c) blend[c] = cfg.beta * po[c] + (1.0 - cfg.beta) * pg[c];
  return static_cast<ClassId>(argmax(blend));
}

double per_class_top1(std::span<const ClassId> preds, std::span<const ClassId> labels,
                      std::span<const ClassId> classes) {
  if (preds.size() != labels.size()) fail(Errc::shape, "per_class_top1: prediction/label counts differ");
  if (classes.empty()) fail(Errc::domain, "per_class_top1: empty class set");
  double sum = 0.0;
  for (ClassId c : classes) {
    std::size_t n = 0, hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != c) continue;
      ++n;
      hit += preds[i] == c;
    }
    if (n == 0) fail(Errc::domain, "per_class_top1: class " + std::to_string(c) + " has no test samples");
    sum += static_cast<double>(hit) / static_cast<double>(n);
  }
  return sum / static_cast<double>(classes.size());
}

double harmonic_mean(double seen, double unseen) {
  return seen + unseen > 0.0 ? 2.0 * seen * unseen / (seen + unseen) : 0.0;
}

GzslMetrics gzsl_metrics(std::span<const ClassId> preds_seen, std::span<const ClassId> preds_unseen,
                         std::span<const ClassId> labels, const Split& split) {
  if (split.test_seen_ids.empty() || split.test_unseen_ids.empty()) {
    fail(Errc::domain, "gzsl_metrics: both test partitions must be non-empty");
  }
  if (preds_seen.size() != split.test_seen_ids.size() || preds_unseen.size() != split.test_unseen_ids.size()) {
    fail(Errc::shape, "gzsl_metrics: prediction counts differ from the split");
  }
  auto labels_of = [&](const std::vector<ImageId>& ids) {
    std::vector<ClassId> out;
    out.reserve(ids.size());
    for (ImageId id : ids) {
      if (id >= labels.size()) fail(Errc::domain, "gzsl_metrics: image id out of range");
      out.push_back(labels[id]);
    }
    return out;
  };
  const auto ls = labels_of(split.test_seen_ids);
  const auto lu = labels_of(split.test_unseen_ids);

  GzslMetrics m;
  m.seen = per_class_top1(preds_seen, ls, split.seen_classes);
  m.unseen = per_class_top1(preds_unseen, lu, split.unseen_classes);
  m.h = harmonic_mean(m.seen, m.unseen);

  auto table = [&](std::span<const ClassId> preds, const std::vector<ClassId>& lab, bool seen) {
    std::map<ClassId, std::pair<std::size_t, std::size_t>> counts;
    for (std::size_t i = 0; i < lab.size(); ++i) {
      auto& [n, hit] = counts[lab[i]];
      ++n;
      hit += preds[i] == lab[i];
    }
    for (const auto& [c, nh] : counts) {
      m.per_class.push_back(ClassAccuracy{c, seen, nh.first,
                                          static_cast<double>(nh.second) / static_cast<double>(nh.first)});
    }
  };
  table(preds_seen, ls, true);
  table(preds_unseen, lu, false);
  std::sort(m.per_class.begin(), m.per_class.end(), [](const auto& a, const auto& b) { return a.cls < b.cls; });
  return m;
}

namespace {

Inference infer_ids(const Model& model, const PreparedData& data, const std::vector<ImageId>& ids,
                    std::size_t batch_size) {
  Inference all;
  const std::size_t c = model.config().n_classes;
  all.o = Tensor::matrix(ids.size(), c);
  if (model.config().global_branch) all.g = Tensor::matrix(ids.size(), c);
  for (std::size_t start = 0; start < ids.size(); start += batch_size) {
    const std::size_t end = std::min(ids.size(), start + batch_size);
    const std::span<const ImageId> chunk(ids.data() + start, end - start);
    const Inference part = model.infer(data.gather(chunk));
    std::copy(part.o.data().begin(), part.o.data().end(), all.o.data().begin() + static_cast<std::ptrdiff_t>(start * c));
    if (!part.g.empty()) {
      std::copy(part.g.data().begin(), part.g.data().end(), all.g.data().begin() + static_cast<std::ptrdiff_t>(start * c));
    }
  }
  return all;
}

}  // namespace

TestOutputs infer_test_sets(const Model& model, const PreparedData& data, const Split& split, std::size_t batch_size) {
  if (batch_size == 0) fail(Errc::config, "batch size must be at least 1");
  return TestOutputs{infer_ids(model, data, split.test_seen_ids, batch_size),
                     infer_ids(model, data, split.test_unseen_ids, batch_size)};
}

EvalReport score(const TestOutputs& out, const ZslDataset& ds, const EnsembleConfig& cfg) {
  cfg.check();
  const Split& split = ds.split;
  EvalReport r;
  r.ensemble = cfg;
  const bool blend = cfg.enabled && !out.seen.g.empty();
  auto predict = [&](const Inference& inf, std::size_t i) {
    return blend ? ensemble_predict(inf.o.row(i), inf.g.row(i), split, cfg)
                 : calibrated_predict(inf.o.row(i), split, cfg.unseen_bonus);
  };
  for (std::size_t i = 0; i < split.test_seen_ids.size(); ++i) r.preds_seen.push_back(predict(out.seen, i));
  for (std::size_t i = 0; i < split.test_unseen_ids.size(); ++i) {
    r.preds_unseen.push_back(predict(out.unseen, i));
    r.czsl_preds.push_back(czsl_predict(out.unseen.o.row(i), split.unseen_classes));
  }
  std::vector<ClassId> lu;
  for (ImageId id : split.test_unseen_ids) lu.push_back(ds.labels[id]);
  r.czsl_acc = per_class_top1(r.czsl_preds, lu, split.unseen_classes);
  r.gzsl = gzsl_metrics(r.preds_seen, r.preds_unseen, ds.labels, split);
  return r;
}

EvalReport evaluate(const Model& model, const PreparedData& data, const ZslDataset& ds, const EnsembleConfig& cfg) {
  return score(infer_test_sets(model, data, ds.split), ds, cfg);
}

}  // namespace drmn

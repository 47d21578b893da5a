#pragma once

#include <span>
#include <string>
#include <vector>

#include "drmn/dataset.hpp"
#include "drmn/model.hpp"

namespace drmn {

struct EnsembleConfig {
  double beta = 0.3;          // weight of the attribute branch in the seen-class blend
  double unseen_bonus = 1.0;  // calibrated-stacking offset on unseen logits
  bool enabled = true;        // false: calibrated attribute branch alone

  void check() const;
};

/// argmax of o over the unseen classes; ties go to the lowest class id.
ClassId czsl_predict(std::span<const double> o, std::span<const ClassId> unseen);

/// argmax of o + bonus * 1[unseen] over all classes (lowest id on ties).
ClassId calibrated_predict(std::span<const double> o, const Split& split, double unseen_bonus);

/// Two-stage ensemble: calibrated stacking on o; if that picks a seen class,
/// return argmax(beta * softmax(o) + (1 - beta) * softmax(g)).
ClassId ensemble_predict(std::span<const double> o, std::span<const double> g, const Split& split,
                         const EnsembleConfig& cfg);

/// Accuracy within each class of `classes`, averaged without weighting.
/// A class with no samples raises a domain error naming it.
double per_class_top1(std::span<const ClassId> preds, std::span<const ClassId> labels,
                      std::span<const ClassId> classes);

double harmonic_mean(double seen, double unseen);

struct ClassAccuracy {
  ClassId cls = 0;
  bool seen = false;
  std::size_t samples = 0;
  double accuracy = 0.0;
};

struct GzslMetrics {
  double unseen = 0.0;  // U
  double seen = 0.0;    // S
  double h = 0.0;       // harmonic mean
  std::vector<ClassAccuracy> per_class;
};

/// preds_seen[i] is the prediction for split.test_seen_ids[i], likewise for
/// unseen; `labels` is indexed by image id.
GzslMetrics gzsl_metrics(std::span<const ClassId> preds_seen, std::span<const ClassId> preds_unseen,
                         std::span<const ClassId> labels, const Split& split);

/// Model outputs on the two test partitions, computed once and re-scored
/// under different ensemble settings.
struct TestOutputs {
  Inference seen;    // rows follow split.test_seen_ids
  Inference unseen;  // rows follow split.test_unseen_ids
};

TestOutputs infer_test_sets(const Model& model, const PreparedData& data, const Split& split,
                            std::size_t batch_size = 64);

struct EvalReport {
  double czsl_acc = 0.0;
  GzslMetrics gzsl;
  std::vector<ClassId> preds_seen, preds_unseen, czsl_preds;
  EnsembleConfig ensemble;
};

EvalReport score(const TestOutputs& outputs, const ZslDataset& ds, const EnsembleConfig& cfg);
EvalReport evaluate(const Model& model, const PreparedData& data, const ZslDataset& ds, const EnsembleConfig& cfg);

}  // namespace drmn

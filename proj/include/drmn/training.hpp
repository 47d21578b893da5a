#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drmn/adam.hpp"
#include "drmn/eval.hpp"
#include "drmn/losses.hpp"
#include "drmn/model.hpp"
#include "drmn/rng.hpp"

namespace drmn {

struct TrainConfig {
  double lambda_sc = 0.1;
  double lambda_gc = 0.6;
  double base_lr = 1e-3;
  int decay_every = 10;
  double decay_factor = 0.5;
  int epochs = 40;
  std::size_t batch_size = 16;
  double gamma = 5.0;
  std::size_t reduction = 4;
  std::uint64_t seed = 1;
  bool mff = true;
  bool aca = true;
  bool sit = true;
  bool global_branch = true;
  bool fusion_residual = true;
  double sit_mix = 0.5;
  std::size_t sit_heads = 4;
  std::size_t sit_mlp_ratio = 2;
  bool gc_over_all_classes = true;
  double calibration_bonus = 1.0;  // indicator offset inside the self-calibration term
  AdamHyper adam;

  void check() const;
  LrSchedule schedule() const { return LrSchedule{base_lr, decay_every, decay_factor}; }
  LossMix loss_mix() const { return LossMix{lambda_gc, sit_mix, sit, global_branch}; }
  ModelConfig model_config(const ZslDataset& ds) const;
};

struct BatchLoss {
  double total = 0.0;
  double ac_pre = 0.0;
  std::optional<double> ac_post;
  std::optional<double> gc;
};

/// Forward + losses for one batch; fills `grads` (aligned with the model's
/// parameters) when non-null.
BatchLoss batch_loss(const Model& model, const ParameterSet& params, const BatchInputs& in,
                     std::span<const ClassId> labels, const Split& split, const TrainConfig& cfg,
                     ParameterSet* grads);

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_ac_pre = 0.0;
  std::optional<double> loss_ac_post;
  std::optional<double> loss_gc;
  double czsl_acc = 0.0;
  double gzsl_u = 0.0;
  double gzsl_s = 0.0;
  double gzsl_h = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);
std::string metrics_csv(const std::vector<EpochMetrics>& history);

/// Everything needed to continue training bit-exactly.
struct TrainState {
  ModelConfig model_config;
  TrainConfig train;
  EnsembleConfig ensemble;
  ParameterSet params;
  std::vector<AdamState> adam;
  int next_epoch = 0;
  std::vector<EpochMetrics> history;
  Rng::State rng_state{};
};

class Trainer {
 public:
  Trainer(const ZslDataset& ds, const TrainConfig& cfg, const EnsembleConfig& ens);
  /// Resume from a checkpointed state.
  Trainer(const ZslDataset& ds, TrainState state);

  /// Trains one epoch, evaluates, appends to history. A non-finite loss
  /// raises numeric_domain naming epoch, batch and term.
  const EpochMetrics& run_epoch();
  void run_until(int epochs, const std::function<void(const EpochMetrics&)>& on_epoch = {});

  const Model& model() const noexcept { return model_; }
  Model& model() noexcept { return model_; }
  const PreparedData& prepared() const noexcept { return data_; }
  const std::vector<EpochMetrics>& history() const noexcept { return history_; }
  int next_epoch() const noexcept { return next_epoch_; }
  TrainState state() const;

 private:
  const ZslDataset* ds_;
  TrainConfig cfg_;
  EnsembleConfig ens_;
  PreparedData data_;
  Model model_;
  Adam adam_;
  int next_epoch_ = 0;
  std::vector<EpochMetrics> history_;
  Rng::State rng_state_{};
};

/// Fresh training run for cfg.epochs epochs.
TrainState fit(const ZslDataset& ds, const TrainConfig& cfg, const EnsembleConfig& ens,
               const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// Seen-class accuracy on the training images (argmax of o over seen
/// classes, eval mode, per-class averaged).
double train_seen_accuracy(const Model& model, const PreparedData& data, const ZslDataset& ds);

}  // namespace drmn

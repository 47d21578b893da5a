#include "drmn/training.hpp"

#include <cmath>
#include <cstdio>

#include "drmn/error.hpp"

namespace drmn {

void TrainConfig::check() const {
  if (!(lambda_sc >= 0.0) || !std::isfinite(lambda_sc)) fail(Errc::config, "lambda_sc must be a finite value >= 0");
  if (!(lambda_gc >= 0.0) || !std::isfinite(lambda_gc)) fail(Errc::config, "lambda_gc must be a finite value >= 0");
  if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) fail(Errc::config, "base_lr must be a finite value >= 0");
  if (decay_every < 1) fail(Errc::config, "decay_every must be at least 1");
  if (!(decay_factor > 0.0) || !std::isfinite(decay_factor)) fail(Errc::config, "decay_factor must be positive");
  if (epochs < 1) fail(Errc::config, "epochs must be at least 1");
  if (batch_size == 0) fail(Errc::config, "batch_size must be at least 1");
  if (!(gamma > 0.0)) fail(Errc::config, "gamma must be positive");
  if (!(sit_mix >= 0.0 && sit_mix <= 1.0)) fail(Errc::config, "sit_mix must lie in [0, 1]");
  if (!std::isfinite(calibration_bonus)) fail(Errc::config, "calibration_bonus must be finite");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    fail(Errc::config, "adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) fail(Errc::config, "adam eps must be positive");
}

ModelConfig TrainConfig::model_config(const ZslDataset& ds) const {
  ModelConfig m = ModelConfig::for_dataset(ds);
  m.reduction = reduction;
  m.sit = sit::SitConfig{sit_heads, sit_mlp_ratio};
  m.gamma = gamma;
  m.mff = mff;
  m.aca = aca;
  m.use_sit = sit;
  m.global_branch = global_branch;
  m.fusion_residual = fusion_residual;
  m.check();
  return m;
}

namespace {

BatchLoss batch_loss_impl(const Model& model, const ParameterSet& params, const BatchInputs& in,
                          std::span<const ClassId> labels, const Split& split, const TrainConfig& cfg,
                          ParameterSet* grads, const char*& stage) {
  Tape t;
  const BoundParameters p(t, params, grads != nullptr);
  stage = "forward";
  const ForwardVars f = model.forward(t, p, in, sit::Mode::train);

  BatchLoss out;
  stage = "loss_ac_pre";
  const Var pre = loss_ac(t, f.o_pre, labels, split, cfg.lambda_sc, cfg.calibration_bonus);
  out.ac_pre = t.value(pre)[0];
  Var post, gc;
  if (f.o_post.valid()) {
    stage = "loss_ac_post";
    post = loss_ac(t, f.o_post, labels, split, cfg.lambda_sc, cfg.calibration_bonus);
    out.ac_post = t.value(post)[0];
  }
  if (f.g.valid()) {
    stage = "loss_gc";
    gc = loss_gc(t, f.g, labels, cfg.gc_over_all_classes ? nullptr : &split);
    out.gc = t.value(gc)[0];
  }
  stage = "loss_total";
  const Var total = total_loss(t, pre, post, gc, cfg.loss_mix());
  out.total = t.value(total)[0];
  if (grads) {
    stage = "backward";
    t.backward(total);
    *grads = p.gradients(t);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

}  // namespace

BatchLoss batch_loss(const Model& model, const ParameterSet& params, const BatchInputs& in,
                     std::span<const ClassId> labels, const Split& split, const TrainConfig& cfg,
                     ParameterSet* grads) {
  const char* stage = "";
  return batch_loss_impl(model, params, in, labels, split, cfg, grads, stage);
}

std::string metrics_csv_header() {
  return "epoch,lr,loss_total,loss_ac_pre,loss_ac_post,loss_gc,czsl_acc,gzsl_u,gzsl_s,gzsl_h";
}

std::string metrics_csv_row(const EpochMetrics& m) {
  std::string s = std::to_string(m.epoch);
  for (double v : {m.lr, m.loss_total, m.loss_ac_pre}) s += "," + fmt(v);
  s += "," + (m.loss_ac_post ? fmt(*m.loss_ac_post) : std::string());
  s += "," + (m.loss_gc ? fmt(*m.loss_gc) : std::string());
  for (double v : {m.czsl_acc, m.gzsl_u, m.gzsl_s, m.gzsl_h}) s += "," + fmt(v);
  return s;
}

std::string metrics_csv(const std::vector<EpochMetrics>& history) {
  std::string s = metrics_csv_header() + "\n";
  for (const auto& m : history) s += metrics_csv_row(m) + "\n";
  return s;
}

Trainer::Trainer(const ZslDataset& ds, const TrainConfig& cfg, const EnsembleConfig& ens)
    : ds_(&ds),
      cfg_(cfg),
      ens_(ens),
      data_(ds),
      model_((cfg.check(), ens.check(), cfg.model_config(ds)), ds.semantics.z, cfg.seed),
      adam_(model_.params(), cfg.adam),
      rng_state_(Rng::stream(cfg.seed, 1000).state()) {
  if (ds.split.train_ids.empty()) fail(Errc::empty_input, "dataset has no training images");
}

Trainer::Trainer(const ZslDataset& ds, TrainState st)
    : ds_(&ds),
      cfg_(st.train),
      ens_(st.ensemble),
      data_(ds),
      model_(st.model_config, ds.semantics.z, std::move(st.params)),
      next_epoch_(st.next_epoch),
      history_(std::move(st.history)),
      rng_state_(st.rng_state) {
  cfg_.check();
  ens_.check();
  const ModelConfig expect = cfg_.model_config(ds);
  if (!expect.same_shapes(model_.config())) fail(Errc::shape, "checkpoint shapes do not match the dataset");
  adam_ = Adam(model_.params(), cfg_.adam);
  if (st.adam.size() != adam_.states().size()) fail(Errc::shape, "optimizer state count does not match the model");
  for (std::size_t i = 0; i < st.adam.size(); ++i) {
    const Tensor& p = model_.params()[i].value;
    if (st.adam[i].m.shape() != p.shape() || st.adam[i].v.shape() != p.shape()) {
      fail(Errc::shape, "optimizer state for " + model_.params()[i].name + " has the wrong shape");
    }
  }
  adam_.states() = std::move(st.adam);
}

const EpochMetrics& Trainer::run_epoch() {
  const int epoch = next_epoch_;
  const double lr = cfg_.schedule().lr(epoch);
  const auto batches = batch_iter(ds_->split.train_ids, cfg_.batch_size, cfg_.seed, epoch);

  double sum_total = 0.0, sum_pre = 0.0, sum_post = 0.0, sum_gc = 0.0;
  bool have_post = false, have_gc = false;
  std::size_t seen_images = 0;
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    const auto& ids = batches[bi];
    std::vector<ClassId> labels;
    labels.reserve(ids.size());
    for (ImageId id : ids) labels.push_back(ds_->labels[id]);
    const BatchInputs in = data_.gather(ids);

    const char* stage = "";
    BatchLoss loss;
    ParameterSet grads;
    auto abort = [&](const std::string& what) {
      fail(Errc::numeric_domain, "training aborted: epoch " + std::to_string(epoch) + " batch " +
                                     std::to_string(bi) + " term " + stage + ": " + what);
    };
    try {
      loss = batch_loss_impl(model_, model_.params(), in, labels, ds_->split, cfg_, &grads, stage);
    } catch (const Error& e) {
      if (e.code() != Errc::numeric_domain) throw;
      abort(e.what());
    }
    auto check_term = [&](const char* name, double v) {
      if (!std::isfinite(v)) {
        stage = name;
        abort("non-finite loss value");
      }
    };
    check_term("loss_ac_pre", loss.ac_pre);
    if (loss.ac_post) check_term("loss_ac_post", *loss.ac_post);
    if (loss.gc) check_term("loss_gc", *loss.gc);
    check_term("loss_total", loss.total);

    stage = "adam";
    try {
      adam_.step(model_.params(), grads, lr);
    } catch (const Error& e) {
      if (e.code() != Errc::numeric_domain) throw;
      abort(e.what());
    }

    // Sample-weighted epoch means.
    const double w = static_cast<double>(ids.size());
    seen_images += ids.size();
    sum_total += w * loss.total;
    sum_pre += w * loss.ac_pre;
    if (loss.ac_post) {
      have_post = true;
      sum_post += w * *loss.ac_post;
    }
    if (loss.gc) {
      have_gc = true;
      sum_gc += w * *loss.gc;
    }
  }

  const double n = static_cast<double>(seen_images);
  EpochMetrics m;
  m.epoch = epoch;
  m.lr = lr;
  m.loss_total = sum_total / n;
  m.loss_ac_pre = sum_pre / n;
  if (have_post) m.loss_ac_post = sum_post / n;
  if (have_gc) m.loss_gc = sum_gc / n;
  const EvalReport r = evaluate(model_, data_, *ds_, ens_);
  m.czsl_acc = r.czsl_acc;
  m.gzsl_u = r.gzsl.unseen;
  m.gzsl_s = r.gzsl.seen;
  m.gzsl_h = r.gzsl.h;

  ++next_epoch_;
  rng_state_ = Rng::stream(cfg_.seed, 1000 + static_cast<std::uint64_t>(next_epoch_)).state();
  history_.push_back(m);
  return history_.back();
}

void Trainer::run_until(int epochs, const std::function<void(const EpochMetrics&)>& on_epoch) {
  while (next_epoch_ < epochs) {
    const EpochMetrics& m = run_epoch();
    if (on_epoch) on_epoch(m);
  }
}

TrainState Trainer::state() const {
  TrainState s;
  s.model_config = model_.config();
  s.train = cfg_;
  s.ensemble = ens_;
  s.params = model_.params();
  s.adam = adam_.states();
  s.next_epoch = next_epoch_;
  s.history = history_;
  s.rng_state = rng_state_;
  return s;
}

TrainState fit(const ZslDataset& ds, const TrainConfig& cfg, const EnsembleConfig& ens,
               const std::function<void(const EpochMetrics&)>& on_epoch) {
  Trainer tr(ds, cfg, ens);
  tr.run_until(cfg.epochs, on_epoch);
  return tr.state();
}

double train_seen_accuracy(const Model& model, const PreparedData& data, const ZslDataset& ds) {
  const auto& ids = ds.split.train_ids;
  if (ids.empty()) fail(Errc::empty_input, "no training images");
  std::vector<ClassId> preds, labels;
  for (std::size_t start = 0; start < ids.size(); start += 64) {
    const std::size_t end = std::min(ids.size(), start + 64);
    const std::span<const ImageId> chunk(ids.data() + start, end - start);
    const Inference inf = model.infer(data.gather(chunk));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      preds.push_back(czsl_predict(inf.o.row(i), ds.split.seen_classes));
      labels.push_back(ds.labels[chunk[i]]);
    }
  }
  return per_class_top1(preds, labels, ds.split.seen_classes);
}

}  // namespace drmn

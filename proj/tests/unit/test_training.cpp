#include <cstdlib>

#include "drmn/checkpoint.hpp"
#include "drmn/config.hpp"
#include "drmn/error.hpp"
#include "drmn/losses.hpp"
#include "drmn/micro.hpp"
#include "drmn/synth.hpp"
#include "drmn/training.hpp"
#include "test_util.hpp"

using namespace drmn;
using testutil::random_tensor;

namespace {

Split split_of(std::vector<ClassId> seen, std::vector<ClassId> unseen) {
  Split s;
  s.seen_classes = std::move(seen);
  s.unseen_classes = std::move(unseen);
  return s;
}

const ZslDataset& small_dataset() {
  static const ZslDataset ds = [] {
    SynthConfig c;
    c.n_classes = 6;
    c.n_seen = 4;
    c.n_attributes = 5;
    c.images_per_class = 6;
    c.level_shapes = {{8, 4, 4}, {16, 2, 2}, {8, 1, 1}};
    c.ref_level = 1;
    return generate_synthetic(c, 21).dataset;
  }();
  return ds;
}

TrainConfig small_train(int epochs = 3) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 5;
  t.seed = 4;
  t.base_lr = 1e-2;
  t.decay_every = 2;
  return t;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::io;
}

}  // namespace

// losses

TEST(LossAc, UniformSeenLogitsGiveLogSeenCount) {
  const Split s = split_of({0, 1, 3}, {2, 4});
  const Tensor o = Tensor::from_rows({{0.7, 0.7, -3.0, 0.7, 9.0}, {0.7, 0.7, 5.0, 0.7, 1.0}});
  const std::vector<ClassId> y = {0, 3};
  EXPECT_NEAR(loss_ac(o, y, s, 0.0), std::log(3.0), 1e-12);
}

TEST(LossAc, DominantTrueLogitApproachesZero) {
  const Split s = split_of({0, 1, 2}, {3});
  const Tensor o = Tensor::from_rows({{40.0, 0.0, 0.0, 0.0}});
  const std::vector<ClassId> y = {0};
  EXPECT_LT(loss_ac(o, y, s, 0.0), 1e-15);
}

TEST(LossAc, MatchesDirectOracle) {
  Rng rng(1);
  const Split s = split_of({0, 2, 4}, {1, 3});
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor o = random_tensor(rng, 6, 5, -25, 25);
    std::vector<ClassId> y;
    for (int i = 0; i < 6; ++i) y.push_back(s.seen_classes[rng.below(3)]);
    const double want = oracle::loss_ac(testutil::to_mat(o), y, s.seen_classes, s.unseen_classes, 0.1);
    EXPECT_NEAR(loss_ac(o, y, s, 0.1), want, 1e-10);
    // recorded form agrees with the plain form
    Tape t;
    EXPECT_NEAR(t.value(loss_ac(t, t.constant(o), y, s, 0.1))[0], want, 1e-10);
  }
}

TEST(LossAc, ZeroLambdaIsSeenCrossEntropy) {
  Rng rng(2);
  const Split s = split_of({1, 2, 3}, {0});
  const Tensor o = random_tensor(rng, 4, 4, -5, 5);
  const std::vector<ClassId> y = {1, 2, 3, 1};
  double ce = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto p = oracle::softmax({o.at(i, 1), o.at(i, 2), o.at(i, 3)});
    ce -= std::log(p[y[i] - 1]);
  }
  EXPECT_NEAR(loss_ac(o, y, s, 0.0), ce / 4.0, 1e-12);
}

TEST(LossAc, UnseenLabelRejected) {
  const Split s = split_of({0, 1}, {2});
  const std::vector<ClassId> y = {2};
  EXPECT_EQ(code_of([&] { loss_ac(Tensor::from_rows({{1, 2, 3}}), y, s, 0.1); }), Errc::domain);
}

TEST(LossAc, GradCheck) {
  Rng rng(3);
  const Split s = split_of({0, 2, 4}, {1, 3});
  const std::vector<ClassId> y = {0, 4, 2};
  ParameterSet p;
  p.add("o", random_tensor(rng, 3, 5, -3, 3));
  auto fn = [&](const ParameterSet& ps, ParameterSet* grads) {
    Tape t;
    BoundParameters bp(t, ps);
    const Var l = loss_ac(t, bp["o"], y, s, 0.1);
    if (grads) {
      t.backward(l);
      *grads = bp.gradients(t);
    }
    return t.value(l)[0];
  };
  EXPECT_LT(grad_check(fn, p).max_rel_error(), 1e-6);
}

TEST(LossGc, UniformGivesLogClassCount) {
  const std::vector<ClassId> y = {0, 4};
  EXPECT_NEAR(loss_gc(Tensor::matrix(2, 5, 1.25), y), std::log(5.0), 1e-12);
}

TEST(LossGc, DominantTrueLogit) {
  const std::vector<ClassId> y = {2};
  EXPECT_LT(loss_gc(Tensor::from_rows({{0, 0, 50, 0}}), y), 1e-15);
}

TEST(LossGc, MatchesOracleAndRange) {
  Rng rng(4);
  const Tensor g = random_tensor(rng, 4, 5, -4, 4);
  const std::vector<ClassId> y = {0, 3, 4, 1};
  EXPECT_NEAR(loss_gc(g, y), oracle::loss_gc(testutil::to_mat(g), y), 1e-12);
  const std::vector<ClassId> bad = {0, 5, 1, 1};
  EXPECT_EQ(code_of([&] { loss_gc(g, bad); }), Errc::domain);
}

TEST(TotalLoss, Arithmetic) {
  LossMix off{0.0, 0.5, false, true};
  EXPECT_EQ(total_loss(1.7, std::nullopt, 3.0, off), 1.7);
  LossMix mix{0.6, 0.5, true, true};
  EXPECT_EQ(total_loss(2.5, 2.5, 0.0, mix), 2.5);
  EXPECT_NEAR(total_loss(1.0, 3.0, 2.0, mix), 3.2, 1e-15);
  LossMix no_global{0.6, 0.5, true, false};
  EXPECT_NEAR(total_loss(1.0, 3.0, std::nullopt, no_global), 2.0, 1e-15);
}

// training loop

TEST(Fit, DeterministicMetrics) {
  const auto a = fit(small_dataset(), small_train(), EnsembleConfig{});
  const auto b = fit(small_dataset(), small_train(), EnsembleConfig{});
  EXPECT_EQ(metrics_csv(a.history), metrics_csv(b.history));
  EXPECT_EQ(encode_checkpoint(a), encode_checkpoint(b));
  EXPECT_EQ(a.history.size(), 3u);
  EXPECT_EQ(a.history[2].lr, small_train().schedule().lr(2));
}

TEST(Fit, ZeroLearningRateKeepsParameters) {
  TrainConfig cfg = small_train(1);
  cfg.base_lr = 0.0;
  const ZslDataset& ds = small_dataset();
  Trainer tr(ds, cfg, EnsembleConfig{});
  const ParameterSet before = tr.model().params();
  const EpochMetrics m = tr.run_epoch();
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(tr.model().params()[i].value, before[i].value);

  // the logged loss is the initial loss over the same batches
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& ids : batch_iter(ds.split.train_ids, cfg.batch_size, cfg.seed, 0)) {
    std::vector<ClassId> y;
    for (ImageId id : ids) y.push_back(ds.labels[id]);
    total += static_cast<double>(ids.size()) *
             batch_loss(tr.model(), before, tr.prepared().gather(ids), y, ds.split, cfg, nullptr).total;
    n += ids.size();
  }
  EXPECT_NEAR(m.loss_total, total / static_cast<double>(n), 1e-12);
}

TEST(Fit, CheckpointResumeMatchesUninterrupted) {
  const ZslDataset& ds = small_dataset();
  const TrainConfig cfg = small_train(5);
  const TrainState full = fit(ds, cfg, EnsembleConfig{});

  Trainer first(ds, cfg, EnsembleConfig{});
  first.run_until(2);
  const auto dir = testutil::scratch_dir("resume");
  save_checkpoint(first.state(), dir / "ck.drmn");
  Trainer second(ds, load_checkpoint(dir / "ck.drmn"));
  EXPECT_EQ(second.next_epoch(), 2);
  second.run_until(5);

  EXPECT_EQ(metrics_csv(second.history()), metrics_csv(full.history));
  const TrainState resumed = second.state();
  for (std::size_t i = 0; i < full.params.size(); ++i) EXPECT_EQ(resumed.params[i].value, full.params[i].value);
  EXPECT_EQ(encode_checkpoint(resumed), encode_checkpoint(full));
}

TEST(Checkpoint, RoundTripAndBadMagic) {
  const TrainState s = fit(small_dataset(), small_train(1), EnsembleConfig{});
  const std::string bytes = encode_checkpoint(s);
  EXPECT_EQ(bytes.substr(0, 8), "DRMNCKPT");
  const TrainState back = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(back.next_epoch, 1);
  EXPECT_EQ(back.rng_state, s.rng_state);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_checkpoint(bad); }), Errc::format);
  EXPECT_EQ(code_of([&] { decode_checkpoint(bytes.substr(0, bytes.size() / 2)); }), Errc::format);
}

TEST(Fit, NonFiniteAbortNamesEpochBatchTerm) {
  Trainer tr(small_dataset(), small_train(1), EnsembleConfig{});
  tr.model().params().get("heads.w4").fill(std::numeric_limits<double>::quiet_NaN());
  try {
    tr.run_epoch();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::numeric_domain);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 0 batch 0 term"), std::string::npos) << msg;
  }
}

TEST(Fit, AblationTogglesDropLossColumns) {
  TrainConfig cfg = small_train(1);
  cfg.sit = false;
  cfg.global_branch = false;
  const auto s = fit(small_dataset(), cfg, EnsembleConfig{});
  EXPECT_FALSE(s.history[0].loss_ac_post.has_value());
  EXPECT_FALSE(s.history[0].loss_gc.has_value());
  const std::string row = metrics_csv_row(s.history[0]);
  EXPECT_NE(row.find(",,,"), std::string::npos) << row;
  EXPECT_EQ(s.history[0].loss_total, s.history[0].loss_ac_pre);
}

// Unseen-class softmax mass after one step is higher with the calibration
// term switched on.
TEST(Fit, CalibrationRaisesUnseenMass) {
  const ZslDataset& ds = small_dataset();
  auto unseen_mass = [&](double lambda_sc) {
    TrainConfig cfg = small_train(1);
    cfg.lambda_sc = lambda_sc;
    Model model(cfg.model_config(ds), ds.semantics.z, cfg.seed);
    const PreparedData data(ds);
    const auto batch = batch_iter(ds.split.train_ids, cfg.batch_size, cfg.seed, 0).front();
    std::vector<ClassId> y;
    for (ImageId id : batch) y.push_back(ds.labels[id]);
    ParameterSet grads;
    batch_loss(model, model.params(), data.gather(batch), y, ds.split, cfg, &grads);
    Adam adam(model.params(), cfg.adam);
    adam.step(model.params(), grads, cfg.base_lr);
    const Inference inf = model.infer(data.gather(ds.split.train_ids));
    double mass = 0.0;
    for (std::size_t i = 0; i < inf.o.rows(); ++i) {
      const auto p = oracle::softmax(oracle::Vec(inf.o.row(i).begin(), inf.o.row(i).end()));
      for (ClassId u : ds.split.unseen_classes) mass += p[u];
    }
    return mass / static_cast<double>(inf.o.rows());
  };
  EXPECT_GT(unseen_mass(0.5), unseen_mass(0.0));
}

TEST(Micro, GradCheckPassesEveryGroup) {
  const auto rep = micro_gradcheck();
  EXPECT_LT(rep.max_rel_error(), 1e-4) << rep.to_string();
  const MicroProblem p = make_micro_problem();
  EXPECT_EQ(rep.entries.size(), p.model->params().size());
  EXPECT_EQ(p.ids.size(), 2u);
  EXPECT_EQ(p.model->config().dim(), 8u);
  EXPECT_EQ(p.model->config().regions(), 4u);
  EXPECT_EQ(p.model->config().n_attributes, 3u);
  EXPECT_EQ(p.model->config().n_classes, 4u);
}

TEST(Micro, CorruptedGroupIsNamed) {
  const auto rep = micro_gradcheck(7, "sit.wq");
  EXPECT_FALSE(rep.passed(1e-4));
  EXPECT_EQ(rep.worst().name, "sit.wq");
}

// configuration

TEST(Config, StrictKeys) {
  using nlohmann::json;
  EXPECT_EQ(code_of([] { train_config_from_json(json{{"lamda_sc", 0.1}}); }), Errc::config);
  EXPECT_EQ(code_of([] { train_config_from_json(json{{"epochs", "ten"}}); }), Errc::config);
  EXPECT_EQ(code_of([] { run_config_from_json(json{{"train", {{"epochs", 3}}}, {"extra", 1}}); }), Errc::config);
  const TrainConfig c = train_config_from_json(json{{"epochs", 7}, {"mff", false}});
  EXPECT_EQ(c.epochs, 7);
  EXPECT_FALSE(c.mff);
  EXPECT_EQ(c.lambda_sc, 0.1);
}

TEST(Config, ResolvedEchoRoundTrips) {
  RunConfig rc;
  rc.data = "d";
  rc.out = "r";
  rc.train.epochs = 9;
  rc.train.lambda_gc = 0.25;
  rc.ensemble.beta = 0.4;
  const auto j = to_json(rc);
  const RunConfig back = run_config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.train.epochs, 9);
  EXPECT_EQ(back.ensemble.beta, 0.4);
}

TEST(Config, SeedOverride) {
  TrainConfig c;
  ::setenv("DRMN_SEED", "77", 1);
  EXPECT_TRUE(apply_seed_override(c));
  EXPECT_EQ(c.seed, 77u);
  ::setenv("DRMN_SEED", "x1", 1);
  EXPECT_EQ(code_of([&] { apply_seed_override(c); }), Errc::config);
  ::unsetenv("DRMN_SEED");
  EXPECT_FALSE(apply_seed_override(c));
}

TEST(Config, Validation) {
  TrainConfig c;
  c.lambda_sc = -1;
  EXPECT_EQ(code_of([&] { c.check(); }), Errc::config);
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_EQ(code_of([&] { c.check(); }), Errc::config);
}

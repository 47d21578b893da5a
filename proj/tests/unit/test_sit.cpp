#include <algorithm>
#include <cstring>
#include <numeric>

#include "drmn/error.hpp"
#include "drmn/sit.hpp"
#include "test_util.hpp"

using namespace drmn;
using testutil::random_tensor;
using testutil::to_mat;
using testutil::to_vec;

namespace {

// Initialised weights with every bias, gain and shift randomised so the
// oracle comparison covers all of them.
ParameterSet random_sit(std::size_t d, const sit::SitConfig& cfg, std::uint64_t seed) {
  ParameterSet p;
  Rng rng(seed);
  sit::init_params(p, d, cfg, rng);
  for (auto& prm : p) {
    if (prm.value.rank() != 1) continue;
    const bool gain = prm.name.find("gain") != std::string::npos;
    for (double& v : prm.value.storage()) v = gain ? rng.uniform(0.5, 1.5) : rng.uniform(-0.5, 0.5);
  }
  return p;
}

oracle::SitWeights weights_of(const ParameterSet& p) {
  oracle::SitWeights w;
  w.wq = to_mat(p.get("sit.wq"));
  w.wk = to_mat(p.get("sit.wk"));
  w.wv = to_mat(p.get("sit.wv"));
  w.wo = to_mat(p.get("sit.wo"));
  w.bq = to_vec(p.get("sit.bq"));
  w.bk = to_vec(p.get("sit.bk"));
  w.bv = to_vec(p.get("sit.bv"));
  w.bo = to_vec(p.get("sit.bo"));
  w.w1 = to_mat(p.get("sit.mlp.w1"));
  w.w2 = to_mat(p.get("sit.mlp.w2"));
  w.b1 = to_vec(p.get("sit.mlp.b1"));
  w.b2 = to_vec(p.get("sit.mlp.b2"));
  w.g1 = to_vec(p.get("sit.ln1.gain"));
  w.c1 = to_vec(p.get("sit.ln1.bias"));
  w.g2 = to_vec(p.get("sit.ln2.gain"));
  w.c2 = to_vec(p.get("sit.ln2.bias"));
  return w;
}

Tensor random_batch(Rng& rng, std::size_t b, std::size_t a, std::size_t d) {
  Tensor t({b, a, d});
  for (double& v : t.storage()) v = rng.uniform(-1, 1);
  return t;
}

}  // namespace

TEST(Mhsa, SingleTokenIsProjectedValue) {
  const sit::SitConfig cfg{2, 2};
  const ParameterSet p = random_sit(8, cfg, 1);
  Rng rng(2);
  const Tensor x = random_tensor(rng, 1, 8);
  const Tensor y = sit::mhsa(x, p, 2);
  const auto w = weights_of(p);
  const auto v = oracle::affine(to_mat(x), w.wv, w.bv);
  const auto want = oracle::affine(v, w.wo, w.bo);
  EXPECT_LT(testutil::max_diff(y, want), 1e-12);
}

TEST(Mhsa, ZeroValueAndOutputGiveZero) {
  const sit::SitConfig cfg{2, 2};
  ParameterSet p = random_sit(8, cfg, 3);
  for (const char* n : {"sit.wv", "sit.bv", "sit.wo", "sit.bo"}) p.get(n).fill(0.0);
  Rng rng(4);
  const Tensor out = sit::mhsa(random_tensor(rng, 5, 8), p, 2);
  for (double v : out.storage()) EXPECT_EQ(v, 0.0);
}

TEST(Mhsa, MatchesPerHeadOracle) {
  const sit::SitConfig cfg{2, 2};
  const ParameterSet p = random_sit(8, cfg, 5);
  Rng rng(6);
  const Tensor x = random_tensor(rng, 5, 8, -2, 2);
  EXPECT_LT(testutil::max_diff(sit::mhsa(x, p, 2), oracle::mhsa(to_mat(x), weights_of(p), 2)), 1e-10);
}

TEST(SitForward, EvalIsBitwiseIdentity) {
  const sit::SitConfig cfg{4, 2};
  const ParameterSet p = random_sit(8, cfg, 7);
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor b = random_batch(rng, 1 + rng.below(4), 1 + rng.below(5), 8);
    const Tensor out = sit::sit_forward(b, p, cfg, sit::Mode::eval);
    ASSERT_EQ(out.shape(), b.shape());
    EXPECT_EQ(std::memcmp(out.data().data(), b.data().data(), b.size() * sizeof(double)), 0);
  }
}

TEST(SitForward, SingleTokenComposition) {
  const sit::SitConfig cfg{2, 2};
  const ParameterSet p = random_sit(8, cfg, 9);
  Rng rng(10);
  const Tensor b = random_batch(rng, 1, 1, 8);
  const Tensor out = sit::sit_forward(b, p, cfg, sit::Mode::train);
  // attention over one token is 1, so MHSA(x) = out_proj(value(x))
  const auto w = weights_of(p);
  const oracle::Mat x = {to_vec(b)};
  const auto att = oracle::affine(oracle::affine(x, w.wv, w.bv), w.wo, w.bo);
  oracle::Vec r(8);
  for (std::size_t d = 0; d < 8; ++d) r[d] = att[0][d] + x[0][d];
  const auto h1 = oracle::layer_norm(r, w.g1, w.c1, 1e-5);
  auto hidden = oracle::affine({h1}, w.w1, w.b1);
  for (double& v : hidden[0]) v = std::max(0.0, v);
  const auto mlp = oracle::affine(hidden, w.w2, w.b2);
  for (std::size_t d = 0; d < 8; ++d) r[d] = mlp[0][d] + h1[d];
  const auto want = oracle::layer_norm(r, w.g2, w.c2, 1e-5);
  for (std::size_t d = 0; d < 8; ++d) EXPECT_NEAR(out[d], want[d], 1e-10);
}

TEST(SitForward, TrainMatchesSequentialOracle) {
  const sit::SitConfig cfg{2, 2};
  const ParameterSet p = random_sit(8, cfg, 11);
  Rng rng(12);
  const Tensor b = random_batch(rng, 2, 3, 8);
  const Tensor out = sit::sit_forward(b, p, cfg, sit::Mode::train);
  ASSERT_EQ(out.shape(), b.shape());
  const auto want = oracle::encoder_layer(to_mat(b.reshaped({6, 8})), weights_of(p), 2);
  EXPECT_LT(testutil::max_diff(out.reshaped({6, 8}), want), 1e-9);
}

TEST(SitForward, PermutationEquivariance) {
  const sit::SitConfig cfg{4, 2};
  const ParameterSet p = random_sit(8, cfg, 13);
  Rng rng(14);
  const Tensor b = random_batch(rng, 2, 3, 8);
  const Tensor out = sit::sit_forward(b, p, cfg, sit::Mode::train).reshaped({6, 8});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Tensor pb({2, 3, 8});
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t d = 0; d < 8; ++d) pb[i * 8 + d] = b[perm[i] * 8 + d];
    const Tensor pout = sit::sit_forward(pb, p, cfg, sit::Mode::train).reshaped({6, 8});
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t d = 0; d < 8; ++d) EXPECT_NEAR(pout.at(i, d), out.at(perm[i], d), 1e-9);
  }
}

TEST(SitForward, ShapeErrors) {
  const sit::SitConfig cfg{2, 2};
  const ParameterSet p = random_sit(8, cfg, 15);
  EXPECT_THROW(sit::sit_forward(Tensor::matrix(3, 8), p, cfg, sit::Mode::train), Error);
  EXPECT_THROW(sit::sit_forward(Tensor({1, 2, 6}), p, cfg, sit::Mode::train), Error);
  ParameterSet q;
  Rng rng(1);
  EXPECT_THROW(sit::init_params(q, 8, sit::SitConfig{3, 2}, rng), Error);
}

TEST(SitForward, EncoderGradCheck) {
  const sit::SitConfig cfg{2, 2};
  ParameterSet p = random_sit(8, cfg, 16);
  Rng rng(17);
  const Tensor x = random_tensor(rng, 6, 8);
  const Tensor probe = random_tensor(rng, 6, 8);
  p.add("input", x);
  auto fn = [&](const ParameterSet& ps, ParameterSet* grads) {
    Tape t;
    BoundParameters bp(t, ps);
    const Var y = sit::encoder_layer(t, bp["input"], sit::bind(bp), 2);
    const Var loss = ops::mean_all(t, ops::mul(t, y, t.constant(probe)));
    if (grads) {
      t.backward(loss);
      *grads = bp.gradients(t);
    }
    return t.value(loss)[0];
  };
  const auto rep = grad_check(fn, p, 1e-6);
  EXPECT_LT(rep.max_rel_error(), 1e-6) << rep.to_string();
}

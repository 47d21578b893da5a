#include <algorithm>
#include <map>
#include <set>

#include "drmn/dataset.hpp"
#include "drmn/error.hpp"
#include "drmn/resample.hpp"
#include "drmn/synth.hpp"
#include "test_util.hpp"

using namespace drmn;
namespace fs = std::filesystem;

namespace {

SynthConfig small_cfg() {
  SynthConfig c;
  c.n_classes = 6;
  c.n_seen = 4;
  c.n_attributes = 5;
  c.images_per_class = 5;
  c.level_shapes = {{4, 4, 4}, {8, 2, 2}, {6, 1, 1}};
  c.ref_level = 1;
  return c;
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = testutil::read_text(e.path());
  return out;
}

ValidationCode reason_of(const ZslDataset& ds) {
  try {
    validate(ds);
  } catch (const ValidationError& e) {
    return e.reason();
  }
  ADD_FAILURE() << "dataset accepted";
  return ValidationCode::missing_field;
}

}  // namespace

TEST(Dataset, RoundTrip) {
  const auto dir = testutil::scratch_dir("ds_roundtrip");
  const auto s = gen_synthetic(small_cfg(), 3, dir);
  const ZslDataset back = load_dataset(dir);
  EXPECT_TRUE(back.features.levels[0].data == s.dataset.features.levels[0].data);
  EXPECT_TRUE(back == s.dataset);
  const SynthTruth t = load_synth_truth(dir);
  EXPECT_EQ(t.attribute_cells, s.truth.attribute_cells);
  EXPECT_EQ(t.signatures, s.truth.signatures);
}

TEST(Dataset, BadMagicNamesFile) {
  const auto dir = testutil::scratch_dir("ds_magic");
  gen_synthetic(small_cfg(), 3, dir);
  std::string bytes = testutil::read_text(dir / "level_1.feat");
  bytes[3] = 'X';
  testutil::write_text(dir / "level_1.feat", bytes);
  try {
    load_dataset(dir);
    FAIL() << "loaded a corrupt file";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::format);
    EXPECT_NE(std::string(e.what()).find("level_1.feat"), std::string::npos) << e.what();
  }
}

TEST(Dataset, TruncatedFeatureFile) {
  const auto dir = testutil::scratch_dir("ds_trunc");
  gen_synthetic(small_cfg(), 3, dir);
  std::string bytes = testutil::read_text(dir / "level_0.feat");
  bytes.resize(bytes.size() - 4);
  testutil::write_text(dir / "level_0.feat", bytes);
  EXPECT_THROW(load_dataset(dir), Error);
}

TEST(Dataset, ZeroNormSemanticRow) {
  const auto dir = testutil::scratch_dir("ds_zero");
  auto s = gen_synthetic(small_cfg(), 3, dir);
  std::string csv = testutil::read_text(dir / "class_attrs.csv");
  // replace the second data row with zeros
  const auto first = csv.find('\n');
  const auto second = csv.find('\n', first + 1);
  const auto third = csv.find('\n', second + 1);
  csv.replace(second + 1, third - second - 1, "0,0,0,0,0");
  testutil::write_text(dir / "class_attrs.csv", csv);
  try {
    load_dataset(dir);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.reason(), ValidationCode::zero_norm_semantic);
    EXPECT_NE(std::string(e.what()).find("zero-norm class semantic"), std::string::npos);
  }
}

TEST(Dataset, ValidatorCodesAreDistinct) {
  const ZslDataset good = generate_synthetic(small_cfg(), 5).dataset;
  EXPECT_NO_THROW(validate(good));
  std::set<ValidationCode> seen;
  auto check = [&](ZslDataset ds, ValidationCode want) {
    EXPECT_EQ(reason_of(ds), want) << validation_code_name(want);
    seen.insert(want);
  };
  {
    auto d = good;
    d.semantics.z.row(0)[0] = NAN;
    check(d, ValidationCode::non_finite_value);
  }
  {
    auto d = good;
    d.semantics.z.row(1)[0] = -1.0;
    check(d, ValidationCode::negative_semantic);
  }
  {
    auto d = good;
    d.semantics.z.fill(0.0);
    check(d, ValidationCode::zero_norm_semantic);
  }
  {
    auto d = good;
    d.split.unseen_classes.push_back(d.split.seen_classes[0]);
    check(d, ValidationCode::seen_unseen_overlap);
  }
  {
    auto d = good;
    d.labels[0] = 99;
    check(d, ValidationCode::class_out_of_range);
  }
  {
    auto d = good;
    d.labels.pop_back();
    check(d, ValidationCode::label_count_mismatch);
  }
  {
    auto d = good;
    d.labels[d.split.train_ids[0]] = d.split.unseen_classes[0];
    check(d, ValidationCode::split_label_mismatch);
  }
  {
    auto d = good;
    d.semantics.attribute_names.pop_back();
    check(d, ValidationCode::missing_field);
  }
  {
    auto d = good;
    d.semantics.z = Tensor::vector(std::vector<double>(d.n_classes(), 1.0));  // no attribute axis
    d.semantics.attribute_names.clear();
    check(d, ValidationCode::no_attributes);
  }
  {
    auto d = good;
    d.split.test_seen_ids.push_back(d.split.train_ids[0]);
    check(d, ValidationCode::split_ids_overlap);
  }
  {
    auto d = good;
    d.split.train_ids.push_back(10000);
    check(d, ValidationCode::image_id_out_of_range);
  }
  {
    auto d = good;
    d.features.levels[0].data.pop_back();
    check(d, ValidationCode::level_shape_mismatch);
  }
  {
    auto d = good;
    d.features.ref_level = 7;
    check(d, ValidationCode::bad_ref_level);
  }
  {
    auto d = good;
    d.features.levels[2].data[3] = INFINITY;
    check(d, ValidationCode::non_finite_value);
  }
  EXPECT_EQ(seen.size(), 13u);
}

TEST(Synth, Deterministic) {
  const auto a = testutil::scratch_dir("synth_a"), b = testutil::scratch_dir("synth_b");
  gen_synthetic(small_cfg(), 42, a);
  gen_synthetic(small_cfg(), 42, b);
  EXPECT_EQ(dir_bytes(a), dir_bytes(b));
}

TEST(Synth, NoiselessSameClassIdentical) {
  SynthConfig cfg = small_cfg();
  cfg.noise = 0.0;
  const ZslDataset ds = generate_synthetic(cfg, 9).dataset;
  const auto& ref = ds.features.ref();
  const auto x = ref.image(0), y = ref.image(1);
  ASSERT_EQ(ds.labels[0], ds.labels[1]);
  EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
}

TEST(Synth, ConfigErrors) {
  SynthConfig cfg;
  cfg.n_seen = 25;
  try {
    generate_synthetic(cfg, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
    EXPECT_EQ(std::string(e.what()), "seen exceeds classes");
  }
  cfg.n_seen = 20;
  EXPECT_THROW(generate_synthetic(cfg, 1), Error);
  // 3 attributes allow only 7 distinct non-zero binary rows
  SynthConfig tight = small_cfg();
  tight.n_attributes = 3;
  tight.n_classes = 8;
  tight.n_seen = 6;
  try {
    generate_synthetic(tight, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
  }
}

// The default dataset validates, and reading attribute presence off the
// planted cells with the known signatures recovers every unseen class.
TEST(Synth, DefaultDatasetNearestSemanticsOracle) {
  SynthConfig cfg;
  cfg.noise = 0.0;
  const auto s = generate_synthetic(cfg, 1);
  const ZslDataset& ds = s.dataset;
  EXPECT_NO_THROW(validate(ds));
  EXPECT_EQ(ds.n_classes(), 20u);
  EXPECT_EQ(ds.n_attributes(), 12u);
  EXPECT_EQ(ds.split.unseen_classes.size(), 5u);
  EXPECT_EQ(ds.n_images(), 600u);

  const auto& ref = ds.features.ref();
  const std::size_t regions = ref.shape.regions(), ch = ref.shape.channels;
  std::size_t correct = 0;
  for (ImageId id : ds.split.test_unseen_ids) {
    const auto map = ref.image(id);
    oracle::Vec score(ds.n_attributes());
    for (std::size_t a = 0; a < score.size(); ++a) {
      double num = 0.0, den = 0.0;
      for (std::size_t c = 0; c < ch; ++c) {
        const double sig = s.truth.signatures.at(a, c);
        num += sig * map[c * regions + s.truth.attribute_cells[a]];
        den += sig * sig;
      }
      score[a] = num / den;
    }
    ClassId best = 0;
    double best_cos = -2.0;
    for (ClassId c : ds.split.unseen_classes) {
      const oracle::Vec zc(ds.semantics.z.row(c).begin(), ds.semantics.z.row(c).end());
      const double cs = oracle::cosine(score, zc);
      if (cs > best_cos) {
        best_cos = cs;
        best = c;
      }
    }
    correct += best == ds.labels[id];
  }
  EXPECT_EQ(correct, ds.split.test_unseen_ids.size());
}

TEST(Synth, DifferentSeedsDiffer) {
  std::vector<std::vector<float>> refs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) refs.push_back(generate_synthetic(small_cfg(), seed).dataset.features.ref().data);
  for (std::size_t i = 0; i < refs.size(); ++i)
    for (std::size_t j = i + 1; j < refs.size(); ++j) EXPECT_NE(refs[i], refs[j]) << i << " vs " << j;
}

TEST(Synth, SplitProportions) {
  const ZslDataset ds = generate_synthetic(SynthConfig{}, 1).dataset;
  EXPECT_EQ(ds.split.train_ids.size(), 15u * 24u);
  EXPECT_EQ(ds.split.test_seen_ids.size(), 15u * 6u);
  EXPECT_EQ(ds.split.test_unseen_ids.size(), 5u * 30u);
}

TEST(BatchIter, SizesAndPartition) {
  std::vector<ImageId> ids(10);
  for (ImageId i = 0; i < 10; ++i) ids[i] = 100 + i;
  const auto b = batch_iter(ids, 4, 7, 0);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 4u);
  EXPECT_EQ(b[1].size(), 4u);
  EXPECT_EQ(b[2].size(), 2u);
  std::multiset<ImageId> all;
  for (const auto& x : b) all.insert(x.begin(), x.end());
  EXPECT_EQ(all, std::multiset<ImageId>(ids.begin(), ids.end()));
}

TEST(BatchIter, PureFunctionOfSeedAndEpoch) {
  std::vector<ImageId> ids(37);
  for (ImageId i = 0; i < 37; ++i) ids[i] = i;
  EXPECT_EQ(batch_iter(ids, 5, 3, 2), batch_iter(ids, 5, 3, 2));
  EXPECT_NE(batch_iter(ids, 5, 3, 2), batch_iter(ids, 5, 3, 3));
  EXPECT_NE(batch_iter(ids, 5, 3, 2), batch_iter(ids, 5, 4, 2));
}

TEST(BatchIter, EmptyInput) {
  try {
    batch_iter(std::vector<ImageId>{}, 4, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_input);
  }
}

TEST(Resample, MatchesLoopOracle) {
  Rng rng(8);
  const std::vector<std::array<std::size_t, 4>> cases = {{2, 2, 4, 4}, {4, 4, 2, 2}, {8, 8, 4, 4}, {1, 1, 4, 4}, {16, 16, 4, 4}};
  for (const auto& [h, w, oh, ow] : cases) {
    std::vector<double> m(3 * h * w);
    for (double& v : m) v = rng.uniform(-1, 1);
    const auto got = resample_map(m, 3, h, w, oh, ow);
    const auto want = oracle::resample_map(m, 3, h, w, oh, ow);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

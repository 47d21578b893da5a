#include "drmn/dab.hpp"

#include <cmath>

#include "drmn/error.hpp"
#include "drmn/ops.hpp"
#include "drmn/resample.hpp"

namespace drmn::dab {

namespace {

// C x H x W map, resampled to the reference grid, as R x C region rows.
Tensor to_region_rows(std::span<const double> map, const LevelShape& s, const LevelShape& ref) {
  const std::vector<double> r = resample_map(map, s.channels, s.height, s.width, ref.height, ref.width);
  const std::size_t regions = ref.regions();
  Tensor rows = Tensor::matrix(regions, s.channels);
  for (std::size_t c = 0; c < s.channels; ++c)
    for (std::size_t k = 0; k < regions; ++k) rows.at(k, c) = r[c * regions + k];
  return rows;
}

void fill_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.storage()) v = rng.uniform(-bound, bound);
}

}  // namespace

std::vector<Tensor> level_regions_from_maps(const std::vector<std::vector<double>>& maps,
                                            const std::vector<LevelShape>& shapes, std::size_t ref_level) {
  if (maps.size() != shapes.size() || ref_level >= shapes.size()) {
    fail(Errc::shape, "fusion: level count or reference level mismatch");
  }
  if (shapes[ref_level].height * shapes[ref_level].width == 0) {
    fail(Errc::empty_input, "spatial attention over zero regions");
  }
  std::vector<Tensor> out;
  out.reserve(maps.size());
  for (std::size_t l = 0; l < maps.size(); ++l) {
    if (maps[l].size() != shapes[l].numel()) fail(Errc::shape, "fusion: level " + std::to_string(l) + " size");
    out.push_back(to_region_rows(maps[l], shapes[l], shapes[ref_level]));
  }
  return out;
}

std::vector<Tensor> image_level_regions(const MultiLevelFeatures& features, std::size_t image) {
  std::vector<std::vector<double>> maps;
  std::vector<LevelShape> shapes;
  for (const auto& lv : features.levels) {
    auto img = lv.image(image);
    maps.emplace_back(img.begin(), img.end());
    shapes.push_back(lv.shape);
  }
  return level_regions_from_maps(maps, shapes, features.ref_level);
}

FusionInputs stack_fusion_inputs(const std::vector<const std::vector<Tensor>*>& images, std::size_t ref_level) {
  if (images.empty()) fail(Errc::empty_input, "fusion over an empty batch");
  FusionInputs in;
  in.batch = images.size();
  const auto& first = *images.front();
  in.regions = first.at(ref_level).rows();
  for (const Tensor& lv : first) in.levels.push_back(Tensor::matrix(in.batch * in.regions, lv.cols()));
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = *images[i];
    if (img.size() != in.levels.size()) fail(Errc::shape, "fusion: images disagree on level count");
    for (std::size_t l = 0; l < img.size(); ++l) {
      if (img[l].shape() != first[l].shape()) fail(Errc::shape, "fusion: images disagree on level shape");
      std::copy(img[l].data().begin(), img[l].data().end(),
                in.levels[l].data().begin() + static_cast<std::ptrdiff_t>(i * img[l].size()));
    }
  }
  in.ref = in.levels[ref_level];
  return in;
}

std::string proj_name(std::size_t level) { return "dab.proj." + std::to_string(level); }

void init_params(ParameterSet& params, const Dims& dims, Rng& rng) {
  const std::size_t d = dims.dim();
  if (dims.reduction == 0 || d % dims.reduction != 0) {
    fail(Errc::config, "feature dim " + std::to_string(d) + " is not divisible by reduction ratio " +
                           std::to_string(dims.reduction));
  }
  if (dims.n_attributes == 0) fail(Errc::config, "need at least one attribute");
  for (std::size_t l = 0; l < dims.level_shapes.size(); ++l) {
    Tensor p = Tensor::matrix(d, dims.level_shapes[l].channels);
    fill_uniform(p, dims.level_shapes[l].channels, rng);
    params.add(proj_name(l), std::move(p));
  }
  Tensor protos = Tensor::matrix(dims.n_attributes, d);
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& v : protos.storage()) v = rng.normal(0.0, sd);
  params.add("dab.prototypes", std::move(protos));
  Tensor w1 = Tensor::matrix(d, d);
  fill_uniform(w1, d, rng);
  params.add("dab.w1", std::move(w1));
  Tensor w2 = Tensor::matrix(d / dims.reduction, d);
  fill_uniform(w2, d, rng);
  params.add("dab.gate.w2", std::move(w2));
  Tensor w3 = Tensor::matrix(d, d / dims.reduction);
  fill_uniform(w3, d / dims.reduction, rng);
  params.add("dab.gate.w3", std::move(w3));
}

Var fuse_levels(Tape& t, const FusionInputs& in, const std::vector<Var>& proj, const FusionOptions& opt) {
  const Var ref = t.constant(in.ref);
  if (!opt.multi_level) return ref;
  if (proj.size() != in.levels.size()) {
    fail(Errc::shape, "fuse_levels: " + std::to_string(proj.size()) + " projections for " +
                          std::to_string(in.levels.size()) + " levels");
  }
  Var acc = opt.residual ? ref : Var{};
  for (std::size_t l = 0; l < in.levels.size(); ++l) {
    if (t.value(proj[l]).cols() != in.levels[l].cols()) {
      fail(Errc::shape, "fuse_levels: projection " + std::to_string(l) + " expects " +
                            std::to_string(t.value(proj[l]).cols()) + " channels, level has " +
                            std::to_string(in.levels[l].cols()));
    }
    const Var term = ops::matmul_nt(t, t.constant(in.levels[l]), proj[l]);
    acc = acc.valid() ? ops::add(t, acc, term) : term;
  }
  if (opt.residual && t.value(acc).cols() != in.ref.cols()) {
    fail(Errc::shape, "fuse_levels: residual needs projection width equal to reference channels");
  }
  return acc;
}

SpatialOut spatial_attention(Tape& t, Var prototypes, Var regions, Var w1, std::size_t batch) {
  if (t.value(regions).rows() == 0) fail(Errc::empty_input, "spatial attention over zero regions");
  const Var query = ops::matmul(t, prototypes, w1);           // A x D, row a = p_a^T W1
  const Var scores = ops::matmul_nt(t, regions, query);       // (B*R) x A
  const Var by_attr = ops::block_transpose(t, scores, batch);  // (B*A) x R
  const Var omega = ops::softmax_rows(t, by_attr);
  const Var k = ops::block_matmul(t, omega, regions, batch);
  return {omega, k};
}

Var channel_descriptor(Tape& t, Var prototypes, Var regions, std::size_t batch) {
  const Var proto_norm = ops::standardize_rows(t, prototypes);
  const Var pooled = ops::block_mean_rows(t, regions, batch);
  const Var pooled_norm = ops::standardize_rows(t, pooled);
  return ops::outer_add_rows(t, pooled_norm, proto_norm);
}

Var channel_gate(Tape& t, Var descriptor, Var w2, Var w3) {
  const std::size_t d = t.value(descriptor).cols();
  if (t.value(w2).cols() != d || t.value(w3).rows() != d || t.value(w3).cols() != t.value(w2).rows()) {
    fail(Errc::shape, "channel_gate: bottleneck shapes " + shape_str(t.value(w2).shape()) + ", " +
                          shape_str(t.value(w3).shape()) + " do not fit width " + std::to_string(d));
  }
  const Var hidden = ops::relu(t, ops::matmul_nt(t, descriptor, w2));
  return ops::sigmoid(t, ops::matmul_nt(t, hidden, w3));
}

Var apply_gate(Tape& t, Var k, Var eta) { return ops::mul(t, k, eta); }

FusedFeatureMap fuse_levels(const std::vector<std::vector<double>>& maps, const std::vector<LevelShape>& shapes,
                            std::size_t ref_level, const std::vector<Tensor>& proj, const FusionOptions& opt) {
  const std::vector<Tensor> rows = level_regions_from_maps(maps, shapes, ref_level);
  const FusionInputs in = stack_fusion_inputs({&rows}, ref_level);
  Tape t;
  std::vector<Var> pv;
  for (const auto& p : proj) pv.push_back(t.constant(p));
  const Var v = fuse_levels(t, in, pv, opt);
  return FusedFeatureMap{t.value(v), shapes[ref_level].height, shapes[ref_level].width};
}

AttentionResult spatial_attention(const Tensor& prototypes, const FusedFeatureMap& v, const Tensor& w1) {
  Tape t;
  const auto out = spatial_attention(t, t.constant(prototypes), t.constant(v.regions), t.constant(w1), 1);
  return {t.value(out.attention), t.value(out.features)};
}

Tensor channel_descriptor(const Tensor& prototypes, const FusedFeatureMap& v) {
  Tape t;
  return t.value(channel_descriptor(t, t.constant(prototypes), t.constant(v.regions), 1));
}

Tensor channel_gate(const Tensor& descriptor, const Tensor& w2, const Tensor& w3) {
  Tape t;
  return t.value(channel_gate(t, t.constant(descriptor), t.constant(w2), t.constant(w3)));
}

Tensor apply_gate(const Tensor& k, const Tensor& eta) {
  Tape t;
  return t.value(apply_gate(t, t.constant(k), t.constant(eta)));
}

}  // namespace drmn::dab

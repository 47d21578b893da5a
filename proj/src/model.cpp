#include "drmn/model.hpp"

#include "drmn/error.hpp"
#include "drmn/ops.hpp"

namespace drmn {

void ModelConfig::check() const {
  if (level_shapes.empty()) fail(Errc::config, "model needs at least one feature level");
  if (ref_level >= level_shapes.size()) fail(Errc::config, "ref_level out of range");
  if (n_attributes == 0) fail(Errc::config, "model needs at least one attribute");
  if (n_classes < 2) fail(Errc::config, "model needs at least two classes");
  if (reduction == 0 || dim() % reduction != 0) {
    fail(Errc::config, "reference channels " + std::to_string(dim()) + " not divisible by reduction ratio " +
                           std::to_string(reduction));
  }
  if (sit.heads == 0 || dim() % sit.heads != 0) {
    fail(Errc::config, "reference channels " + std::to_string(dim()) + " not divisible by SIT heads " +
                           std::to_string(sit.heads));
  }
  if (!(gamma > 0.0)) fail(Errc::config, "gamma must be positive");
}

ModelConfig ModelConfig::for_dataset(const ZslDataset& ds) {
  ModelConfig cfg;
  for (const auto& lv : ds.features.levels) cfg.level_shapes.push_back(lv.shape);
  cfg.ref_level = ds.features.ref_level;
  cfg.n_attributes = ds.n_attributes();
  cfg.n_classes = ds.n_classes();
  return cfg;
}

bool ModelConfig::same_shapes(const ModelConfig& o) const {
  return level_shapes == o.level_shapes && ref_level == o.ref_level && n_attributes == o.n_attributes &&
         n_classes == o.n_classes;
}

PreparedData::PreparedData(const ZslDataset& ds) : ref_level_(ds.features.ref_level) {
  const std::size_t n = ds.n_images();
  regions_.reserve(n);
  pooled_last_.reserve(n);
  const auto& last = ds.features.last();
  for (std::size_t i = 0; i < n; ++i) {
    regions_.push_back(dab::image_level_regions(ds.features, i));
    pooled_last_.push_back(heads::global_average_pool(last.image(i), last.shape));
  }
}

BatchInputs PreparedData::gather(std::span<const ImageId> ids) const {
  if (ids.empty()) fail(Errc::empty_input, "empty batch");
  std::vector<const std::vector<Tensor>*> imgs;
  imgs.reserve(ids.size());
  for (ImageId id : ids) {
    if (id >= regions_.size()) fail(Errc::domain, "image id " + std::to_string(id) + " out of range");
    imgs.push_back(&regions_[id]);
  }
  BatchInputs in;
  in.fusion = dab::stack_fusion_inputs(imgs, ref_level_);
  const std::size_t c_last = pooled_last_.front().size();
  in.pooled_last = Tensor::matrix(ids.size(), c_last);
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy(pooled_last_[ids[i]].begin(), pooled_last_[ids[i]].end(), in.pooled_last.row(i).begin());
  return in;
}

ParameterSet Model::init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.check();
  // Stream 1: dab (projections by level, prototypes, W1, W2, W3), then SIT, then heads.
  Rng rng = Rng::stream(seed, 1);
  ParameterSet params;
  dab::init_params(params, dab::Dims{cfg.level_shapes, cfg.ref_level, cfg.n_attributes, cfg.reduction}, rng);
  sit::init_params(params, cfg.dim(), cfg.sit, rng);
  heads::init_params(params, cfg.dim(), cfg.level_shapes.back().channels, cfg.n_classes, rng);
  return params;
}

Model::Model(ModelConfig cfg, const Tensor& class_semantics, std::uint64_t seed)
    : Model(cfg, class_semantics, init_params(cfg, seed)) {}

Model::Model(ModelConfig cfg, const Tensor& class_semantics, ParameterSet params)
    : cfg_(std::move(cfg)), params_(std::move(params)), z_unit_(heads::unit_rows(class_semantics)) {
  cfg_.check();
  if (z_unit_.rows() != cfg_.n_classes || z_unit_.cols() != cfg_.n_attributes) {
    fail(Errc::shape, "class semantics " + shape_str(z_unit_.shape()) + " do not match the model (" +
                          std::to_string(cfg_.n_classes) + " classes, " + std::to_string(cfg_.n_attributes) +
                          " attributes)");
  }
  const ParameterSet expected = init_params(cfg_, 0);
  if (expected.size() != params_.size()) fail(Errc::shape, "parameter count does not match the model");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].name != params_[i].name || expected[i].value.shape() != params_[i].value.shape()) {
      fail(Errc::shape, "parameter " + params_[i].name + " does not match " + expected[i].name + " " +
                            shape_str(expected[i].value.shape()));
    }
  }
}

ForwardVars Model::forward(Tape& t, const BoundParameters& p, const BatchInputs& in, sit::Mode mode) const {
  const std::size_t b = in.batch();
  ForwardVars f;
  std::vector<Var> proj;
  for (std::size_t l = 0; l < cfg_.level_shapes.size(); ++l) proj.push_back(p[dab::proj_name(l)]);
  f.regions = dab::fuse_levels(t, in.fusion, proj, dab::FusionOptions{cfg_.mff, cfg_.fusion_residual});

  const Var protos = p["dab.prototypes"];
  const auto spatial = dab::spatial_attention(t, protos, f.regions, p["dab.w1"], b);
  f.attention = spatial.attention;
  f.k = spatial.features;
  if (cfg_.aca) {
    const Var q = dab::channel_descriptor(t, protos, f.regions, b);
    f.eta = dab::channel_gate(t, q, p["dab.gate.w2"], p["dab.gate.w3"]);
    f.h = dab::apply_gate(t, f.k, f.eta);
  } else {
    f.h = f.k;
  }

  const Var z_unit = t.constant(z_unit_);
  const Var w4 = p["heads.w4"];
  f.e_pre = heads::attribute_scores(t, protos, f.h, w4, b);
  f.o_pre = heads::hyperspherical_logits(t, f.e_pre, z_unit, cfg_.gamma);

  if (cfg_.use_sit && mode == sit::Mode::train) {
    f.h_post = sit::encoder_layer(t, f.h, sit::bind(p), cfg_.sit.heads);
    f.e_post = heads::attribute_scores(t, protos, f.h_post, w4, b);
    f.o_post = heads::hyperspherical_logits(t, f.e_post, z_unit, cfg_.gamma);
  }
  if (cfg_.global_branch) {
    f.g = heads::global_logits(t, t.constant(in.pooled_last), p["heads.global.weight"], p["heads.global.bias"]);
  }
  return f;
}

Inference Model::infer(const BatchInputs& in) const {
  Tape t;
  const BoundParameters p(t, params_, false);
  const ForwardVars f = forward(t, p, in, sit::Mode::eval);
  Inference out;
  out.o = t.value(f.o_pre);
  if (f.g.valid()) out.g = t.value(f.g);
  out.attention = t.value(f.attention);
  if (f.eta.valid()) out.eta = t.value(f.eta);
  return out;
}

}  // namespace drmn

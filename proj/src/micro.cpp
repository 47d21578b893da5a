#include "drmn/micro.hpp"

#include "drmn/error.hpp"

namespace drmn {

MicroProblem make_micro_problem(std::uint64_t seed) {
  SynthConfig sc;
  sc.n_classes = 4;
  sc.n_seen = 3;
  sc.n_attributes = 3;
  sc.images_per_class = 3;
  sc.level_shapes = {{4, 4, 4}, {8, 2, 2}, {6, 1, 1}};
  sc.ref_level = 1;

  MicroProblem p;
  p.synth = generate_synthetic(sc, seed);
  p.train.sit_heads = 2;
  p.train.reduction = 4;
  p.train.seed = seed;
  const ZslDataset& ds = p.synth.dataset;
  p.data = std::make_unique<PreparedData>(ds);
  p.model = std::make_unique<Model>(p.train.model_config(ds), ds.semantics.z, seed);
  p.ids.assign(ds.split.train_ids.begin(), ds.split.train_ids.begin() + 2);
  for (ImageId id : p.ids) p.labels.push_back(ds.labels[id]);
  p.inputs = p.data->gather(p.ids);
  return p;
}

LossFn micro_loss_fn(const MicroProblem& p, const std::string& corrupt) {
  if (!corrupt.empty() && !p.model->params().contains(corrupt)) {
    fail(Errc::domain, "unknown parameter group " + corrupt);
  }
  return [&p, corrupt](const ParameterSet& params, ParameterSet* grads) {
    const double loss = batch_loss(*p.model, params, p.inputs, p.labels, p.synth.dataset.split, p.train, grads).total;
    if (grads && !corrupt.empty()) {
      for (auto& g : grads->get(corrupt).storage()) g = g * 1.5 + 0.05;
    }
    return loss;
  };
}

GradCheckReport micro_gradcheck(std::uint64_t seed, const std::string& corrupt) {
  const MicroProblem p = make_micro_problem(seed);
  return grad_check(micro_loss_fn(p, corrupt), p.model->params());
}

}  // namespace drmn

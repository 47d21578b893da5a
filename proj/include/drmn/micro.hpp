#pragma once

#include <memory>
#include <string>
#include <vector>

#include "drmn/gradcheck.hpp"
#include "drmn/synth.hpp"
#include "drmn/training.hpp"

namespace drmn {

/// Tiny end-to-end problem for gradient checking: 2 training images,
/// 3 attributes, D = 8, 4 classes (3 seen), a 2 x 2 reference grid,
/// 2 SIT heads, reduction 4. Everything is drawn from `seed`.
struct MicroProblem {
  SynthDataset synth;
  TrainConfig train;
  std::unique_ptr<PreparedData> data;
  std::unique_ptr<Model> model;
  std::vector<ImageId> ids;
  std::vector<ClassId> labels;
  BatchInputs inputs;
};

MicroProblem make_micro_problem(std::uint64_t seed = 7);

/// Loss over the micro batch (SIT in train mode). A non-empty `corrupt`
/// names a parameter whose analytic gradient is deliberately skewed.
LossFn micro_loss_fn(const MicroProblem& p, const std::string& corrupt = "");

/// grad_check of micro_loss_fn at the problem's initial parameters.
GradCheckReport micro_gradcheck(std::uint64_t seed = 7, const std::string& corrupt = "");

}  // namespace drmn

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "drmn/autograd.hpp"
#include "drmn/tensor.hpp"

namespace drmn {

struct Parameter {
  std::string name;  // canonical path, e.g. "dab.prototypes"
  Tensor value;
};

/// Ordered collection of named trainable tensors. Order is insertion order
/// and defines checkpoint layout and optimizer state alignment.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;
  Tensor& get(std::string_view name) { return params_[index(name)].value; }
  const Tensor& get(std::string_view name) const { return params_[index(name)].value; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Same names and shapes, all values zero.
  ParameterSet zeros_like() const;
  std::size_t numel() const;

 private:
  std::vector<Parameter> params_;
};

/// Binds a ParameterSet onto a tape as leaves, one Var per parameter.
class BoundParameters {
 public:
  /// `trainable` = false records the values as constants (inference).
  BoundParameters(Tape& tape, const ParameterSet& params, bool trainable = true);
  Var operator[](std::string_view name) const;
  /// Reads gradients back after Tape::backward, aligned with the set.
  ParameterSet gradients(const Tape& tape) const;

 private:
  const ParameterSet* params_;
  std::vector<Var> vars_;
};

}  // namespace drmn

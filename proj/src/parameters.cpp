#include "drmn/parameters.hpp"

#include "drmn/error.hpp"

namespace drmn {

std::size_t ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) fail(Errc::config, "duplicate parameter name " + name);
  params_.push_back(Parameter{std::move(name), std::move(value)});
  return params_.size() - 1;
}

std::size_t ParameterSet::index(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  fail(Errc::domain, "unknown parameter " + std::string(name));
}

bool ParameterSet::contains(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet z;
  for (const auto& p : params_) z.add(p.name, Tensor(p.value.shape(), 0.0));
  return z;
}

std::size_t ParameterSet::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

BoundParameters::BoundParameters(Tape& tape, const ParameterSet& params, bool trainable) : params_(&params) {
  vars_.reserve(params.size());
  for (const auto& p : params) vars_.push_back(trainable ? tape.leaf(p.value) : tape.constant(p.value));
}

Var BoundParameters::operator[](std::string_view name) const { return vars_[params_->index(name)]; }

ParameterSet BoundParameters::gradients(const Tape& tape) const {
  ParameterSet g;
  for (std::size_t i = 0; i < vars_.size(); ++i) g.add((*params_)[i].name, tape.grad(vars_[i]));
  return g;
}

}  // namespace drmn

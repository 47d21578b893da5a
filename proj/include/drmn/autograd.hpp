#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "drmn/tensor.hpp"

namespace drmn {

/// Handle to a node recorded on a Tape.
struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const noexcept { return id != std::numeric_limits<std::uint32_t>::max(); }
};

/// Single-owner gradient tape. Nodes are appended in evaluation order and
/// `backward` walks them in reverse, so gradient accumulation order is a
/// fixed function of the recorded program.
///
/// Every pushed value is checked for finiteness; a NaN or Inf raises
/// numeric_domain naming the producing op.
class Tape {
 public:
  using Backward =
      std::function<void(Tape& tape, const Tensor& out_value, const Tensor& out_grad)>;

  Var constant(Tensor value);
  /// Leaf that takes part in differentiation. The tape keeps its own copy.
  Var leaf(Tensor value);
  Var push(const char* op, Tensor value, std::vector<Var> parents, Backward backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Adds `g` into the gradient of `v` (no-op for constants).
  void accumulate(Var v, const Tensor& g);
  /// Zero-initialised gradient buffer of `v` for in-place accumulation.
  Tensor& grad_buffer(Var v);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one element.
  void backward(Var loss);

  /// Gradient of `v` after backward; zeros when nothing reached it.
  Tensor grad(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    const char* op;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<Var> parents;
    Backward backward;
  };
  const Node& node(Var v) const;
  Node& node(Var v);

  std::vector<Node> nodes_;
};

}  // namespace drmn

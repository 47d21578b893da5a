#include "drmn/autograd.hpp"

#include "drmn/error.hpp"

namespace drmn {

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) fail(Errc::domain, "invalid tape variable");
  return nodes_[v.id];
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size()) fail(Errc::domain, "invalid tape variable");
  return nodes_[v.id];
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) fail(Errc::numeric_domain, "constant holds non-finite values");
  nodes_.push_back(Node{"constant", std::move(value), {}, false, false, {}, {}});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Tensor value) {
  if (!value.all_finite()) fail(Errc::numeric_domain, "leaf holds non-finite values");
  nodes_.push_back(Node{"leaf", std::move(value), {}, false, true, {}, {}});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::push(const char* op, Tensor value, std::vector<Var> parents, Backward backward) {
  if (!value.all_finite()) {
    fail(Errc::numeric_domain, std::string("non-finite output from ") + op);
  }
  bool rg = false;
  for (Var p : parents) rg = rg || node(p).requires_grad;
  nodes_.push_back(Node{op, std::move(value), {}, false, rg, std::move(parents),
                        rg ? std::move(backward) : Backward{}});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Tensor& Tape::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  Node& n = node(v);
  if (!n.requires_grad) return;
  if (g.size() != n.value.size()) {
    fail(Errc::shape, std::string("gradient shape mismatch into ") + n.op + ": " +
                          shape_str(g.shape()) + " vs " + shape_str(n.value.shape()));
  }
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), g.storage());
    n.has_grad = true;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

void Tape::backward(Var loss) {
  Node& root = node(loss);
  if (root.value.size() != 1) fail(Errc::shape, "backward requires a scalar loss");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  root.grad = Tensor(root.value.shape(), 1.0);
  root.has_grad = true;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.value, n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.has_grad) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

}  // namespace drmn

#include "stgin/autograd.hpp"

#include "stgin/errors.hpp"

namespace stgin {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, record_, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  if (record_) {
    for (const Var& in : inputs) needs = needs || nodes_[in.id].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
  bool needs = false;
  if (record_) {
    for (const Var& in : inputs) needs = needs || nodes_[in.id].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
  return Var{this, nodes_.size() - 1};
}

std::span<double> Tape::grad_buffer(Var v) {
  Node& node = nodes_[v.id];
  if (node.grad.size() != node.value.size()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

std::vector<double> Tape::grad(Var v) const {
  const Node& node = nodes_[v.id];
  if (node.grad.empty()) return std::vector<double>(node.value.size(), 0.0);
  return node.grad;
}

void Tape::backward(Var root) {
  if (!record_) throw ContractError("backward() on a tape that is not recording");
  if (root.tape != this) throw ContractError("backward() root belongs to another tape");
  if (nodes_[root.id].value.size() != 1) {
    throw ContractError("backward() needs a scalar root, got shape " +
                        shape_string(nodes_[root.id].value.shape()));
  }
  if (!nodes_[root.id].needs_grad) return;
  grad_buffer(root)[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.empty()) continue;
    // Ops only touch lower-indexed nodes, so this node's buffers stay put.
    node.backward(*this, node.value, node.grad);
  }
}

}  // namespace stgin

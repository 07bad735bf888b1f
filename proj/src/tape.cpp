#include "hgb/tape.hpp"

#include <algorithm>

#include "hgb/errors.hpp"

namespace hgb {

const DenseMatrix& Var::value() const { return tape_->value(id_); }
const DenseMatrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(DenseMatrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::variable(DenseMatrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = p.trainable;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(DenseMatrix value, std::vector<NodeId> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](NodeId i) { return nodes_[i].requires_grad; });
  if (n.requires_grad) n.backward = std::move(backward);
  n.inputs = std::move(inputs);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

DenseMatrix& Tape::grad_buffer(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && n.value.size() > 0) n.grad = DenseMatrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  const DenseMatrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be scalar (1x1), got " + lv.shape_string());
  }
  for (Node& n : nodes_) n.grad = DenseMatrix();
  grad_buffer(loss.id())(0, 0) = 1.0;
  backward_visits_ = 0;
  for (NodeId id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) {
      n.backward(*this, id);
      ++backward_visits_;
    }
  }
  for (Node& n : nodes_) {
    if (n.param != nullptr && n.param->trainable && !n.grad.empty()) {
      Parameter& p = *n.param;
      if (!p.grad.same_shape(p.value)) p.zero_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad.data()[i] += n.grad.data()[i];
    }
  }
}

}  // namespace hgb

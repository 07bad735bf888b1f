#pragma once

#include <functional>
#include <vector>

#include "hgb/dense_matrix.hpp"
#include "hgb/parameters.hpp"

namespace hgb {

class Tape;

using NodeId = std::size_t;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const DenseMatrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  // Gradient after Tape::backward; empty if the node did not receive one.
  const DenseMatrix& grad() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Reverse-mode differentiation record. Nodes are appended in execution order,
/// so inputs always precede their consumers.
class Tape {
 public:
  // Propagates the gradient held by `self` into its inputs.
  using BackwardFn = std::function<void(Tape&, NodeId self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(DenseMatrix value);
  // Differentiable leaf not tied to a parameter (used for gradient checks).
  Var variable(DenseMatrix value);
  // Leaf bound to a parameter. backward() adds its gradient into p.grad.
  Var parameter(Parameter& p);

  Var record(DenseMatrix value, std::vector<NodeId> inputs, BackwardFn backward);

  // Seeds d(loss)=1 and walks the tape in reverse. loss must be 1x1.
  void backward(Var loss);

  const DenseMatrix& value(NodeId id) const { return nodes_[id].value; }
  const DenseMatrix& grad(NodeId id) const { return nodes_[id].grad; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  // Gradient buffer for accumulation, zero-initialised on first access.
  DenseMatrix& grad_buffer(NodeId id);

  std::size_t size() const { return nodes_.size(); }
  // Number of nodes whose backward function ran during the last backward().
  std::size_t backward_visits() const { return backward_visits_; }

 private:
  struct Node {
    DenseMatrix value;
    DenseMatrix grad;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::size_t backward_visits_ = 0;
};

}  // namespace hgb

#pragma once

// Tape-based reverse-mode differentiation over dense double matrices.
//
// A Tape records every operation as a node holding its value and a closure that
// pushes the node's gradient to its inputs. Nodes are appended in evaluation
// order, so a single reverse sweep is a valid topological traversal.
//
// Binary elementwise ops broadcast their second operand when it is 1x1, 1xC
// (row) or Rx1 (column).

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace swatnn::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const { return value()(0, 0); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int)>;

  Tape() { nodes_.reserve(4096); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant_scalar(double value);
  Var variable(Matrix value);
  // References storage owned by the caller; it must outlive the tape.
  // A non-negative slot marks the node as a trainable parameter.
  Var external(const Matrix& value, bool requires_grad, int slot = -1);

  // Reverse sweep from a 1x1 node.
  void backward(Var output, double seed = 1.0);
  // Gradient of the last backward() w.r.t. v; zeros if v was not reached.
  Matrix grad(Var v) const;
  bool has_grad(Var v) const { return nodes_[v.id()].has_grad; }

  // Calls fn(slot, grad) for every external node with a slot that received gradient.
  template <class Fn>
  void for_each_slot_grad(Fn&& fn) const {
    for (const auto& n : nodes_)
      if (n.slot >= 0 && n.has_grad) fn(n.slot, n.grad);
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Op-construction interface.
  Var push(Matrix value, bool requires_grad, Backward backward);
  const Matrix& value(int id) const {
    const auto& n = nodes_[id];
    return n.ext ? *n.ext : n.value;
  }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const Matrix& node_grad(int id) const { return nodes_[id].grad; }

  template <class Expr>
  void accumulate(int id, const Expr& g) {
    auto& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.has_grad) {
      n.grad += g;
    } else {
      n.grad = g;
      n.has_grad = true;
    }
  }

 private:
  struct Node {
    Matrix value;
    const Matrix* ext = nullptr;
    Matrix grad;
    Backward backward;
    int slot = -1;
    bool requires_grad = false;
    bool has_grad = false;
  };
  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// Elementwise arithmetic (b broadcasts).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var leaky_relu(Var a, double slope);
// GPT-2 tanh approximation.
Var gelu(Var a);
Var square(Var a);
Var abs(Var a);
// Subgradient 0 at 0.
Var sqrt(Var a);

Var softmax_rows(Var a);
// Zero-mean, unit-variance per row; no affine part.
Var layer_norm_rows(Var a, double eps = 1e-5);

Var slice(Var a, Index row, Index col, Index rows, Index cols);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);

Var sum(Var a);
Var mean(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace swatnn::ad

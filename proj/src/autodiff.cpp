#include "swatnn/autodiff.hpp"

#include "swatnn/error.hpp"

#include <cmath>
#include <string>

namespace swatnn::ad {

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::constant_scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::variable(Matrix value) { return push(std::move(value), true, nullptr); }

Var Tape::external(const Matrix& value, bool requires_grad, int slot) {
  Node n;
  n.ext = &value;
  n.requires_grad = requires_grad;
  n.slot = requires_grad ? slot : -1;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Var output, double seed) {
  require(output.tape() == this, ErrorKind::Shape, "backward: variable belongs to another tape");
  require(output.rows() == 1 && output.cols() == 1, ErrorKind::Shape, "backward: output must be 1x1");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  if (!nodes_[output.id()].requires_grad) return;
  accumulate(output.id(), Matrix::Constant(1, 1, seed));
  for (int id = output.id(); id >= 0; --id) {
    auto& n = nodes_[id];
    if (n.has_grad && n.backward) n.backward(*this, id);
  }
}

Matrix Tape::grad(Var v) const {
  const auto& n = nodes_[v.id()];
  if (n.has_grad) return n.grad;
  const auto& val = value(v.id());
  return Matrix::Zero(val.rows(), val.cols());
}

namespace {

enum class Bcast { Same, Row, Col, Scalar };

Bcast classify(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Bcast::Same;
  if (b.rows() == 1 && b.cols() == 1) return Bcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::Row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Bcast::Col;
  fail(ErrorKind::Shape, std::string(op) + ": cannot broadcast " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + " onto " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()));
}

Matrix expand(const Matrix& b, Bcast kind, Index rows, Index cols) {
  switch (kind) {
    case Bcast::Same: return b;
    case Bcast::Row: return b.replicate(rows, 1);
    case Bcast::Col: return b.replicate(1, cols);
    case Bcast::Scalar: return Matrix::Constant(rows, cols, b(0, 0));
  }
  return b;
}

Matrix reduce(const Matrix& g, Bcast kind) {
  switch (kind) {
    case Bcast::Same: return g;
    case Bcast::Row: return g.colwise().sum();
    case Bcast::Col: return g.rowwise().sum();
    case Bcast::Scalar: return Matrix::Constant(1, 1, g.sum());
  }
  return g;
}

Tape& same_tape(Var a, Var b) {
  require(a.tape() == b.tape() && a.tape() != nullptr, ErrorKind::Shape, "operands on different tapes");
  return *a.tape();
}

bool any_grad(Tape& t, Var a) { return t.requires_grad(a.id()); }
bool any_grad(Tape& t, Var a, Var b) { return t.requires_grad(a.id()) || t.requires_grad(b.id()); }

// Unary op whose derivative is a function of (input, output).
template <class Fwd, class Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tape& t = *a.tape();
  Matrix y = a.value().unaryExpr(fwd);
  const int ia = a.id();
  return t.push(std::move(y), any_grad(t, a), [ia, deriv](Tape& tp, int self) {
    const Matrix& x = tp.value(ia);
    const Matrix& out = tp.value(self);
    const Matrix& g = tp.node_grad(self);
    Matrix d(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j)
      for (Index i = 0; i < x.rows(); ++i) d(i, j) = g(i, j) * deriv(x(i, j), out(i, j));
    tp.accumulate(ia, d);
  });
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Bcast kind = classify(av, bv, "add");
  Matrix y;
  switch (kind) {
    case Bcast::Same: y = av + bv; break;
    case Bcast::Row: y = av.rowwise() + bv.row(0); break;
    case Bcast::Col: y = av.colwise() + bv.col(0); break;
    case Bcast::Scalar: y = av.array() + bv(0, 0); break;
  }
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(y), any_grad(t, a, b), [ia, ib, kind](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    tp.accumulate(ia, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, reduce(g, kind));
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Bcast kind = classify(av, bv, "sub");
  Matrix y;
  switch (kind) {
    case Bcast::Same: y = av - bv; break;
    case Bcast::Row: y = av.rowwise() - bv.row(0); break;
    case Bcast::Col: y = av.colwise() - bv.col(0); break;
    case Bcast::Scalar: y = av.array() - bv(0, 0); break;
  }
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(y), any_grad(t, a, b), [ia, ib, kind](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    tp.accumulate(ia, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, -reduce(g, kind));
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Bcast kind = classify(av, bv, "mul");
  Matrix y = av.cwiseProduct(expand(bv, kind, av.rows(), av.cols()));
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(y), any_grad(t, a, b), [ia, ib, kind](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    const Matrix& x = tp.value(ia);
    const Matrix& w = tp.value(ib);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(expand(w, kind, x.rows(), x.cols())));
    if (tp.requires_grad(ib)) tp.accumulate(ib, reduce(g.cwiseProduct(x), kind));
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value() * s, any_grad(t, a),
                [ia, s](Tape& tp, int self) { tp.accumulate(ia, tp.node_grad(self) * s); });
}

Var add_scalar(Var a, double s) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix y = a.value().array() + s;
  return t.push(std::move(y), any_grad(t, a),
                [ia](Tape& tp, int self) { tp.accumulate(ia, tp.node_grad(self)); });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require(a.cols() == b.rows(), ErrorKind::Shape,
          "matmul: inner dimensions " + std::to_string(a.cols()) + " and " + std::to_string(b.rows()));
  Matrix y = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(y), any_grad(t, a, b), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require(a.cols() == b.cols(), ErrorKind::Shape, "matmul_nt: column counts differ");
  Matrix y = a.value() * b.value().transpose();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(y), any_grad(t, a, b), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.transpose() * tp.value(ia));
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix y = a.value().transpose();
  return t.push(std::move(y), any_grad(t, a),
                [ia](Tape& tp, int self) { tp.accumulate(ia, tp.node_grad(self).transpose()); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
      [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Var gelu(Var a) {
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double c = 0.044715;
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::tanh(k * (x + c * x * x * x))); },
      [](double x, double) {
        const double th = std::tanh(k * (x + c * x * x * x));
        return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * k * (1.0 + 3.0 * c * x * x);
      });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var sqrt(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; },
      [](double x, double y) { return x > 0.0 ? 0.5 / y : 0.0; });
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  const int ia = a.id();
  return t.push(std::move(y), any_grad(t, a), [ia](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    const Matrix& out = tp.value(self);
    Matrix d = out.cwiseProduct(g);
    const Eigen::VectorXd dots = d.rowwise().sum();
    d -= out.cwiseProduct(dots.replicate(1, out.cols()));
    tp.accumulate(ia, d);
  });
}

Var layer_norm_rows(Var a, double eps) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  const Index n = x.cols();
  Eigen::VectorXd inv_std(x.rows());
  Matrix y(x.rows(), n);
  for (Index i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    y.row(i) = (x.row(i).array() - mu) * inv_std(i);
  }
  const int ia = a.id();
  return t.push(std::move(y), any_grad(t, a), [ia, inv_std, n](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    const Matrix& xhat = tp.value(self);
    Matrix d(g.rows(), g.cols());
    const double dn = static_cast<double>(n);
    for (Index i = 0; i < g.rows(); ++i) {
      const double gs = g.row(i).sum();
      const double gx = g.row(i).dot(xhat.row(i));
      d.row(i) = (inv_std(i) / dn) * (dn * g.row(i).array() - gs - xhat.row(i).array() * gx);
    }
    tp.accumulate(ia, d);
  });
}

Var slice(Var a, Index row, Index col, Index rows, Index cols) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  require(row >= 0 && col >= 0 && rows >= 0 && cols >= 0 && row + rows <= x.rows() && col + cols <= x.cols(),
          ErrorKind::Shape, "slice: out of range");
  Matrix y = x.block(row, col, rows, cols);
  const int ia = a.id();
  const Index ar = x.rows(), ac = x.cols();
  return t.push(std::move(y), any_grad(t, a), [ia, row, col, rows, cols, ar, ac](Tape& tp, int self) {
    Matrix d = Matrix::Zero(ar, ac);
    d.block(row, col, rows, cols) = tp.node_grad(self);
    tp.accumulate(ia, d);
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), ErrorKind::Shape, "concat_rows: no parts");
  Tape& t = *parts.front().tape();
  const Index cols = parts.front().cols();
  Index rows = 0;
  bool rg = false;
  for (const auto& p : parts) {
    require(p.cols() == cols, ErrorKind::Shape, "concat_rows: column counts differ");
    rows += p.rows();
    rg = rg || t.requires_grad(p.id());
  }
  Matrix y(rows, cols);
  std::vector<int> ids;
  std::vector<Index> offsets;
  Index r = 0;
  for (const auto& p : parts) {
    y.middleRows(r, p.rows()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(r);
    r += p.rows();
  }
  return t.push(std::move(y), rg, [ids, offsets](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      tp.accumulate(ids[k], g.middleRows(offsets[k], tp.value(ids[k]).rows()));
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), ErrorKind::Shape, "concat_cols: no parts");
  Tape& t = *parts.front().tape();
  const Index rows = parts.front().rows();
  Index cols = 0;
  bool rg = false;
  for (const auto& p : parts) {
    require(p.rows() == rows, ErrorKind::Shape, "concat_cols: row counts differ");
    cols += p.cols();
    rg = rg || t.requires_grad(p.id());
  }
  Matrix y(rows, cols);
  std::vector<int> ids;
  std::vector<Index> offsets;
  Index c = 0;
  for (const auto& p : parts) {
    y.middleCols(c, p.cols()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(c);
    c += p.cols();
  }
  return t.push(std::move(y), rg, [ids, offsets](Tape& tp, int self) {
    const Matrix& g = tp.node_grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      tp.accumulate(ids[k], g.middleCols(offsets[k], tp.value(ids[k]).cols()));
    }
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  const Index r = a.rows(), c = a.cols();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), any_grad(t, a), [ia, r, c](Tape& tp, int self) {
    tp.accumulate(ia, Matrix::Constant(r, c, tp.node_grad(self)(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  require(n > 0, ErrorKind::Shape, "mean: empty operand");
  return scale(sum(a), 1.0 / n);
}

}  // namespace swatnn::ad

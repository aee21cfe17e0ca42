#include "support.hpp"

#include <doctest.h>

using namespace swatnn;
using swatnn::testing::numeric_grad;
using swatnn::testing::random_matrix;
using swatnn::testing::rel_error;

namespace {

// Builds f(x) = sum(w .* op(x)) with a fixed random weighting w and compares
// reverse-mode gradients against central differences.
void check_unary(const std::function<ad::Var(ad::Var)>& op, Matrix x, double tol = 1e-7) {
  Rng rng(7);
  ad::Tape probe;
  const Matrix shape = op(probe.constant(x)).value();
  const Matrix w = random_matrix(rng, shape.rows(), shape.cols());
  auto f = [&](const Matrix& v) {
    ad::Tape t;
    return ad::sum(ad::mul(op(t.constant(v)), t.constant(w))).scalar();
  };
  ad::Tape t;
  ad::Var xv = t.variable(x);
  ad::Var out = ad::sum(ad::mul(op(xv), t.constant(w)));
  t.backward(out);
  CHECK(rel_error(t.grad(xv), numeric_grad(f, x)) < tol);
}

void check_binary(const std::function<ad::Var(ad::Var, ad::Var)>& op, const Matrix& a, const Matrix& b,
                  double tol = 1e-7) {
  Rng rng(11);
  ad::Tape probe;
  const Matrix shape = op(probe.constant(a), probe.constant(b)).value();
  const Matrix w = random_matrix(rng, shape.rows(), shape.cols());
  ad::Tape t;
  ad::Var av = t.variable(a), bv = t.variable(b);
  t.backward(ad::sum(ad::mul(op(av, bv), t.constant(w))));
  auto fa = [&](const Matrix& v) {
    ad::Tape u;
    return ad::sum(ad::mul(op(u.constant(v), u.constant(b)), u.constant(w))).scalar();
  };
  auto fb = [&](const Matrix& v) {
    ad::Tape u;
    return ad::sum(ad::mul(op(u.constant(a), u.constant(v)), u.constant(w))).scalar();
  };
  CHECK(rel_error(t.grad(av), numeric_grad(fa, a)) < tol);
  CHECK(rel_error(t.grad(bv), numeric_grad(fb, b)) < tol);
}

}  // namespace

TEST_CASE("elementwise ops match finite differences") {
  Rng rng(1);
  const Matrix x = random_matrix(rng, 3, 4, -2.0, 2.0);
  check_unary([](ad::Var v) { return ad::tanh(v); }, x);
  check_unary([](ad::Var v) { return ad::sigmoid(v); }, x);
  check_unary([](ad::Var v) { return ad::exp(v); }, x);
  check_unary([](ad::Var v) { return ad::leaky_relu(v, 0.01); }, x);
  check_unary([](ad::Var v) { return ad::gelu(v); }, x);
  check_unary([](ad::Var v) { return ad::square(v); }, x);
  check_unary([](ad::Var v) { return ad::abs(v); }, x);
  check_unary([](ad::Var v) { return ad::scale(v, -3.5); }, x);
  check_unary([](ad::Var v) { return ad::add_scalar(v, 0.25); }, x);
  check_unary([](ad::Var v) { return ad::sqrt(ad::add_scalar(ad::square(v), 0.1)); }, x);
}

TEST_CASE("row ops and reductions match finite differences") {
  Rng rng(2);
  const Matrix x = random_matrix(rng, 4, 5, -2.0, 2.0);
  check_unary([](ad::Var v) { return ad::softmax_rows(v); }, x);
  check_unary([](ad::Var v) { return ad::layer_norm_rows(v); }, x, 1e-6);
  check_unary([](ad::Var v) { return ad::transpose(v); }, x);
  check_unary([](ad::Var v) { return ad::slice(v, 1, 2, 2, 3); }, x);
  check_unary([](ad::Var v) { return ad::mean(v); }, x);
  check_unary([](ad::Var v) { return ad::concat_rows({v, ad::square(v)}); }, x);
  check_unary([](ad::Var v) { return ad::concat_cols({ad::tanh(v), v}); }, x);
}

TEST_CASE("binary ops with broadcasting match finite differences") {
  Rng rng(3);
  const Matrix a = random_matrix(rng, 3, 4);
  check_binary([](ad::Var p, ad::Var q) { return ad::add(p, q); }, a, random_matrix(rng, 3, 4));
  check_binary([](ad::Var p, ad::Var q) { return ad::add(p, q); }, a, random_matrix(rng, 1, 4));
  check_binary([](ad::Var p, ad::Var q) { return ad::sub(p, q); }, a, random_matrix(rng, 3, 1));
  check_binary([](ad::Var p, ad::Var q) { return ad::mul(p, q); }, a, random_matrix(rng, 1, 1));
  check_binary([](ad::Var p, ad::Var q) { return ad::mul(p, q); }, a, random_matrix(rng, 3, 4));
  check_binary([](ad::Var p, ad::Var q) { return ad::matmul(p, q); }, a, random_matrix(rng, 4, 2));
  check_binary([](ad::Var p, ad::Var q) { return ad::matmul_nt(p, q); }, a, random_matrix(rng, 5, 4));
}

TEST_CASE("gradients accumulate over reuse and reset between sweeps") {
  ad::Tape t;
  ad::Var x = t.variable(Matrix::Constant(1, 1, 3.0));
  ad::Var y = ad::add(ad::mul(x, x), x);  // x^2 + x
  t.backward(y);
  CHECK(t.grad(x)(0, 0) == doctest::Approx(7.0));
  t.backward(y);
  CHECK(t.grad(x)(0, 0) == doctest::Approx(7.0));
}

TEST_CASE("sqrt has zero gradient at zero") {
  ad::Tape t;
  ad::Var x = t.variable(Matrix::Zero(1, 2));
  t.backward(ad::sum(ad::sqrt(x)));
  CHECK(t.grad(x).isZero());
}

TEST_CASE("external parameters report gradients by slot") {
  const Matrix p = Matrix::Constant(2, 2, 0.5);
  ad::Tape t;
  ad::Var v = t.external(p, true, 4);
  t.backward(ad::sum(ad::square(v)));
  int seen = 0;
  t.for_each_slot_grad([&](int slot, const Matrix& g) {
    CHECK(slot == 4);
    CHECK(g.isApprox(Matrix::Constant(2, 2, 1.0)));
    ++seen;
  });
  CHECK(seen == 1);
}

#pragma once

// Shared helpers for the unit tests: finite differences and random generators.

#include "swatnn/autodiff.hpp"
#include "swatnn/netcore.hpp"
#include "swatnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace swatnn::testing {

// Central differences of f around x.
inline Matrix numeric_grad(const std::function<double(const Matrix&)>& f, Matrix x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x.data()[i];
    x.data()[i] = orig + h;
    const double up = f(x);
    x.data()[i] = orig - h;
    const double down = f(x);
    x.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double rel_error(const Matrix& a, const Matrix& b, double floor = 1e-8) {
  const double scale = std::max({a.norm(), b.norm(), floor});
  return (a - b).norm() / scale;
}

inline Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

inline Vector random_vector(Rng& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

// Network with continuous logits and masks in (0, 1).
inline Mlp random_soft_mlp(Rng& rng, int input_dim, const std::vector<int>& widths, int output_dim) {
  Mlp m;
  m.input_dim = input_dim;
  m.output_dim = output_dim;
  int fan_in = input_dim;
  for (int w : widths) {
    HiddenLayer l;
    l.weights = random_matrix(rng, fan_in, w);
    l.biases = random_vector(rng, w);
    l.act_logits = random_matrix(rng, w, kNumActivations, -2.0, 2.0);
    l.neuron_mask = random_vector(rng, w, 0.05, 0.95);
    m.layers.push_back(std::move(l));
    fan_in = w;
  }
  m.output_weights = random_matrix(rng, fan_in, output_dim);
  m.output_biases = random_vector(rng, output_dim);
  return m;
}

}  // namespace swatnn::testing

#include "support.hpp"

#include "swatnn/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace swatnn;
using swatnn::testing::numeric_grad;
using swatnn::testing::random_matrix;
using swatnn::testing::random_soft_mlp;
using swatnn::testing::rel_error;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mlp single_tanh_neuron() {
  Mlp m;
  m.input_dim = 2;
  m.output_dim = 1;
  Matrix w(2, 1);
  w << 1.0, 0.0;
  m.layers.push_back(make_hard_layer(w, Vector::Zero(1), {ActivationKind::Tanh}));
  m.output_weights = Matrix::Constant(1, 1, 2.0);
  m.output_biases = Vector::Zero(1);
  return m;
}

}  // namespace

TEST_CASE("activation values") {
  CHECK(activation_apply(ActivationKind::Sigmoid, 0.0) == 0.5);
  CHECK(activation_apply(ActivationKind::Tanh, 0.0) == 0.0);
  CHECK(activation_apply(ActivationKind::LeakyRelu, -2.0, 0.01) == doctest::Approx(-0.02).epsilon(1e-15));
  CHECK(activation_from_name("tanh") == ActivationKind::Tanh);
  CHECK_THROWS_AS(activation_from_name("relu6"), Error);
}

TEST_CASE("tempered activation mixing") {
  for (double c : {-3.0, 0.0, 4.5}) CHECK(neuron_output(0.0, {c, c, c}, 1.0) == doctest::Approx(1.0 / 6.0));
  CHECK(std::abs(neuron_output(-1.0, {10.0, 0.0, 0.0}, 0.01) - (-0.01)) < 1e-6);

  // Hand computation for logits (0, 1, 0) at x = 0.5.
  const double e = std::exp(1.0);
  const double s = 2.0 + e;
  const double expected = (0.5 + e * std::tanh(0.5) + sigmoid(0.5)) / s;
  CHECK(neuron_output(0.5, {0.0, 1.0, 0.0}, 1.0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("post-anneal saturation bound") {
  // Logit gap 0.1 at T = 0.01 gives a weight of at least 1 / (1 + 2 e^-10).
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const double top = rng.uniform(-5.0, 5.0);
    const double gap = rng.uniform(0.1, 3.0);
    std::array<double, kNumActivations> logits{top, top - gap - rng.uniform(0.0, 2.0), top - gap};
    const int pos = rng.uniform_int(0, 2);
    std::swap(logits[0], logits[pos]);
    const auto a = mixture_weights(logits, 0.01);
    CHECK(a[pos] > 0.99);
  }
}

TEST_CASE("neuron gates") {
  CHECK(soft_neuron_gate(0.5, MaskMode::Soft, 0.5, 20.0) == 0.5);
  CHECK(soft_neuron_gate(0.4, MaskMode::Hard, 0.5, 20.0) == 0.0);
  CHECK(soft_neuron_gate(0.9, MaskMode::Soft, 0.5, 20.0) == doctest::Approx(sigmoid(8.0)).epsilon(1e-15));
  CHECK(soft_neuron_gate(0.9, MaskMode::Soft, 0.5, 20.0) == doctest::Approx(0.99966).epsilon(1e-5));
}

TEST_CASE("eval_mlp examples") {
  Rng rng(9);
  Mlp m = random_soft_mlp(rng, 2, {3, 4}, 1);
  for (auto& l : m.layers) l.weights.setZero();
  m.output_weights.setZero();
  m.output_biases(0) = 0.3;
  const Matrix xs = random_matrix(rng, 7, 2, -4.0, 4.0);
  const Matrix y = eval_mlp(m, xs, {});
  CHECK((y.array() == 0.3).all());

  Matrix x(1, 2);
  x << 0.5, 7.0;
  EvalConfig hard;
  hard.mask_mode = MaskMode::Hard;
  CHECK(eval_mlp(single_tanh_neuron(), x, hard)(0, 0) == doctest::Approx(2.0 * std::tanh(0.5)).epsilon(1e-15));
  CHECK(eval_mlp(single_tanh_neuron(), x, hard)(0, 0) == doctest::Approx(0.92423).epsilon(1e-5));

  Mlp off = random_soft_mlp(rng, 2, {5, 2}, 2);
  for (auto& l : off.layers) l.neuron_mask.setZero();
  const Matrix yo = eval_mlp(off, xs, hard);
  for (Eigen::Index i = 0; i < yo.rows(); ++i) CHECK(yo.row(i).transpose() == off.output_biases);

  CHECK_THROWS_AS(eval_mlp(m, Matrix::Zero(3, 3), {}), Error);
}

TEST_CASE("validate rejects chain mismatches and masks outside [0,1]") {
  Rng rng(3);
  Mlp m = random_soft_mlp(rng, 2, {3}, 1);
  CHECK_NOTHROW(m.validate());
  Mlp bad = m;
  bad.output_weights = Matrix::Zero(4, 1);
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = m;
  bad.layers[0].neuron_mask(0) = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(m.weight_count() == 2 * 3 + 3 * 1);
}

TEST_CASE("hard evaluation equals evaluation of the pruned network") {
  Rng rng(21);
  EvalConfig hard;
  hard.mask_mode = MaskMode::Hard;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> widths(static_cast<std::size_t>(rng.uniform_int(1, 3)));
    for (auto& w : widths) w = rng.uniform_int(1, 5);
    const Mlp m = random_soft_mlp(rng, rng.uniform_int(1, 3), widths, rng.uniform_int(1, 2));
    const Mlp p = prune_inactive(m);
    CHECK_NOTHROW(p.validate());
    const Matrix xs = random_matrix(rng, 16, m.input_dim, -2.0, 2.0);
    CHECK(rel_error(eval_mlp(m, xs, hard), eval_mlp(p, xs, hard), 1.0) < 1e-14);
    for (const auto& l : p.layers) CHECK((l.neuron_mask.array() == 1.0).all());
  }
}

TEST_CASE("graph evaluation matches plain evaluation in both modes") {
  Rng rng(4);
  for (MaskMode mode : {MaskMode::Soft, MaskMode::Hard}) {
    const Mlp m = random_soft_mlp(rng, 2, {4, 3}, 2);
    const Matrix xs = random_matrix(rng, 10, 2);
    EvalConfig cfg;
    cfg.mask_mode = mode;
    cfg.temperature = 0.7;
    ad::Tape t;
    const MlpVars v = bind_mlp(t, m, false);
    CHECK(rel_error(eval_mlp(v, t.constant(xs), cfg).value(), eval_mlp(m, xs, cfg), 1.0) < 1e-14);
    CHECK(mlp_values(v) == m);
  }
}

TEST_CASE("soft evaluation gradients match finite differences") {
  Rng rng(8);
  const Mlp m = random_soft_mlp(rng, 2, {4, 3}, 1);
  const Matrix xs = random_matrix(rng, 12, 2);
  const Matrix ys = random_matrix(rng, 12, 1);
  EvalConfig cfg;
  cfg.temperature = 0.5;

  ad::Tape t;
  const MlpVars v = bind_mlp(t, m, true);
  t.backward(ad::sum(ad::square(ad::sub(eval_mlp(v, t.constant(xs), cfg), t.constant(ys)))));

  auto loss_with = [&](auto&& edit) {
    return [&, edit](const Matrix& p) {
      Mlp c = m;
      edit(c, p);
      return (eval_mlp(c, xs, cfg) - ys).squaredNorm();
    };
  };
  for (std::size_t j = 0; j < m.layers.size(); ++j) {
    const auto& lv = v.layers[j];
    CHECK(rel_error(t.grad(lv.weights),
                    numeric_grad(loss_with([j](Mlp& c, const Matrix& p) { c.layers[j].weights = p; }),
                                 m.layers[j].weights)) < 1e-6);
    CHECK(rel_error(t.grad(lv.act_logits),
                    numeric_grad(loss_with([j](Mlp& c, const Matrix& p) { c.layers[j].act_logits = p; }),
                                 m.layers[j].act_logits)) < 1e-6);
    CHECK(rel_error(t.grad(lv.neuron_mask).transpose(),
                    numeric_grad(loss_with([j](Mlp& c, const Matrix& p) { c.layers[j].neuron_mask = p; }),
                                 Matrix(m.layers[j].neuron_mask))) < 1e-6);
  }
  CHECK(rel_error(t.grad(v.output_weights),
                  numeric_grad(loss_with([](Mlp& c, const Matrix& p) { c.output_weights = p; }), m.output_weights)) <
        1e-6);
}

TEST_CASE("temperature gradient of the mixture matches finite differences") {
  // d/dT of softmax(l/T) mixing, through the graph op with T as a scale constant.
  const std::array<double, kNumActivations> logits{0.3, -0.7, 1.1};
  const double x = 0.8, temp = 0.6, h = 1e-6;
  const double fd = (neuron_output(x, logits, temp + h) - neuron_output(x, logits, temp - h)) / (2 * h);
  // Closed form: dα_k/dT = -α_k (l_k - Σ α_j l_j) / T².
  const auto a = mixture_weights(logits, temp);
  double mean_l = 0.0;
  for (int k = 0; k < kNumActivations; ++k) mean_l += a[k] * logits[k];
  double analytic = 0.0;
  for (int k = 0; k < kNumActivations; ++k)
    analytic += -a[k] * (logits[k] - mean_l) / (temp * temp) * activation_apply(kAllActivations[k], x);
  CHECK(std::abs(analytic - fd) / std::max(std::abs(analytic), 1e-8) < 1e-6);
}

TEST_CASE("width-zero layer passes zeros forward") {
  Mlp m;
  m.input_dim = 2;
  m.output_dim = 1;
  HiddenLayer l;
  l.weights = Matrix::Zero(2, 0);
  l.biases = Vector::Zero(0);
  l.act_logits = Matrix::Zero(0, kNumActivations);
  l.neuron_mask = Vector::Zero(0);
  m.layers.push_back(l);
  m.output_weights = Matrix::Zero(0, 1);
  m.output_biases = Vector::Constant(1, -0.25);
  EvalConfig hard;
  hard.mask_mode = MaskMode::Hard;
  const Matrix xs = Matrix::Ones(3, 2);
  CHECK((eval_mlp(m, xs, hard).array() == -0.25).all());
  ad::Tape t;
  CHECK((eval_mlp(bind_mlp(t, m, false), t.constant(xs), hard).value().array() == -0.25).all());
}

#include "swatnn/netcore.hpp"

#include "swatnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace swatnn {

std::string_view activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::LeakyRelu: return "leaky_relu";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sigmoid: return "sigmoid";
  }
  return "unknown";
}

ActivationKind activation_from_name(std::string_view name) {
  for (auto k : kAllActivations)
    if (activation_name(k) == name) return k;
  fail(ErrorKind::Config, "unknown activation '" + std::string(name) + "'");
}

void Mlp::validate() const {
  require(input_dim > 0 && output_dim > 0, ErrorKind::Shape, "mlp: input/output dims must be positive");
  for (int j = 0; j < depth(); ++j) {
    const auto& l = layers[j];
    const int w = l.width();
    require(l.weights.rows() == fan_in(j) && l.weights.cols() == w, ErrorKind::Shape,
            "mlp: layer " + std::to_string(j) + " weight shape is not chain-compatible");
    require(l.act_logits.rows() == w && l.act_logits.cols() == kNumActivations, ErrorKind::Shape,
            "mlp: layer " + std::to_string(j) + " activation logits shape");
    require(l.neuron_mask.size() == w, ErrorKind::Shape, "mlp: layer " + std::to_string(j) + " mask size");
    for (int h = 0; h < w; ++h)
      require(l.neuron_mask(h) >= 0.0 && l.neuron_mask(h) <= 1.0, ErrorKind::Shape, "mlp: mask outside [0,1]");
  }
  const int last = depth() == 0 ? input_dim : layers.back().width();
  require(output_weights.rows() == last && output_weights.cols() == output_dim, ErrorKind::Shape,
          "mlp: output weight shape");
  require(output_biases.size() == output_dim, ErrorKind::Shape, "mlp: output bias size");
}

int Mlp::weight_count() const {
  int n = static_cast<int>(output_weights.size());
  for (const auto& l : layers) n += static_cast<int>(l.weights.size());
  return n;
}

namespace {
template <class A, class B>
bool same(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}
}  // namespace

bool operator==(const HiddenLayer& a, const HiddenLayer& b) {
  return same(a.weights, b.weights) && same(a.biases, b.biases) && same(a.act_logits, b.act_logits) &&
         same(a.neuron_mask, b.neuron_mask);
}

bool operator==(const Mlp& a, const Mlp& b) {
  return a.input_dim == b.input_dim && a.output_dim == b.output_dim && a.layers == b.layers &&
         same(a.output_weights, b.output_weights) && same(a.output_biases, b.output_biases);
}

Matrix saturated_logits(const std::vector<ActivationKind>& acts) {
  Matrix logits = Matrix::Zero(static_cast<Eigen::Index>(acts.size()), kNumActivations);
  for (std::size_t h = 0; h < acts.size(); ++h) logits(static_cast<Eigen::Index>(h), static_cast<int>(acts[h])) = kSaturatedLogit;
  return logits;
}

HiddenLayer make_hard_layer(Matrix weights, Vector biases, const std::vector<ActivationKind>& acts) {
  HiddenLayer l;
  l.weights = std::move(weights);
  l.biases = std::move(biases);
  l.act_logits = saturated_logits(acts);
  l.neuron_mask = Vector::Ones(l.biases.size());
  return l;
}

ActivationKind argmax_activation(const Eigen::Ref<const Eigen::RowVectorXd>& logits) {
  int best = 0;
  for (int k = 1; k < kNumActivations; ++k)
    if (logits(k) > logits(best)) best = k;
  return static_cast<ActivationKind>(best);
}

void EvalConfig::validate() const {
  require(temperature > 0.0 && std::isfinite(temperature), ErrorKind::Config, "eval: temperature must be > 0");
  require(leaky_slope > 0.0 && leaky_slope < 1.0, ErrorKind::Config, "eval: leaky slope must lie in (0,1)");
  require(mask_sharpness > 0.0, ErrorKind::Config, "eval: mask sharpness must be > 0");
}

double activation_apply(ActivationKind kind, double x, double leaky_slope) {
  switch (kind) {
    case ActivationKind::LeakyRelu: return x >= 0.0 ? x : leaky_slope * x;
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

std::array<double, kNumActivations> mixture_weights(const std::array<double, kNumActivations>& logits,
                                                    double temperature) {
  const double inv_t = 1.0 / temperature;
  std::array<double, kNumActivations> a{};
  double m = logits[0] * inv_t;
  for (int k = 1; k < kNumActivations; ++k) m = std::max(m, logits[k] * inv_t);
  double s = 0.0;
  for (int k = 0; k < kNumActivations; ++k) {
    a[k] = std::exp(logits[k] * inv_t - m);
    s += a[k];
  }
  for (auto& v : a) v /= s;
  return a;
}

double neuron_output(double pre_activation, const std::array<double, kNumActivations>& logits, double temperature,
                     double leaky_slope) {
  const auto alpha = mixture_weights(logits, temperature);
  double y = 0.0;
  for (int k = 0; k < kNumActivations; ++k) y += activation_apply(kAllActivations[k], pre_activation, leaky_slope) * alpha[k];
  return y;
}

double soft_neuron_gate(double mask_value, MaskMode mode, double threshold, double sharpness) {
  if (mode == MaskMode::Hard) return mask_value >= threshold ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(-sharpness * (mask_value - threshold)));
}

Matrix eval_mlp(const Mlp& mlp, const Matrix& xs, const EvalConfig& cfg) {
  cfg.validate();
  mlp.validate();
  require(xs.cols() == mlp.input_dim, ErrorKind::Shape,
          "eval_mlp: input has " + std::to_string(xs.cols()) + " columns, network expects " +
              std::to_string(mlp.input_dim));
  Matrix h = xs;
  for (const auto& layer : mlp.layers) {
    Matrix pre = h * layer.weights;
    pre.rowwise() += layer.biases.transpose();
    Matrix out(pre.rows(), pre.cols());
    for (int j = 0; j < layer.width(); ++j) {
      const double gate =
          soft_neuron_gate(layer.neuron_mask(j), cfg.mask_mode, cfg.neuron_threshold, cfg.mask_sharpness);
      if (cfg.mask_mode == MaskMode::Hard) {
        const auto kind = argmax_activation(layer.act_logits.row(j));
        for (Eigen::Index i = 0; i < pre.rows(); ++i)
          out(i, j) = activation_apply(kind, pre(i, j), cfg.leaky_slope) * gate;
      } else {
        std::array<double, kNumActivations> logits{};
        for (int k = 0; k < kNumActivations; ++k) logits[k] = layer.act_logits(j, k);
        const auto alpha = mixture_weights(logits, cfg.temperature);
        for (Eigen::Index i = 0; i < pre.rows(); ++i) {
          double y = 0.0;
          for (int k = 0; k < kNumActivations; ++k)
            y += activation_apply(kAllActivations[k], pre(i, j), cfg.leaky_slope) * alpha[k];
          out(i, j) = y * gate;
        }
      }
    }
    h = std::move(out);
  }
  Matrix y = h * mlp.output_weights;
  y.rowwise() += mlp.output_biases.transpose();
  return y;
}

Mlp prune_inactive(const Mlp& mlp, double threshold) {
  Mlp out;
  out.input_dim = mlp.input_dim;
  out.output_dim = mlp.output_dim;
  std::vector<int> prev_keep(mlp.input_dim);
  for (int i = 0; i < mlp.input_dim; ++i) prev_keep[i] = i;
  for (const auto& l : mlp.layers) {
    std::vector<int> keep;
    for (int h = 0; h < l.width(); ++h)
      if (l.neuron_mask(h) >= threshold) keep.push_back(h);
    HiddenLayer p;
    const auto nk = static_cast<Eigen::Index>(keep.size());
    p.weights.resize(static_cast<Eigen::Index>(prev_keep.size()), nk);
    p.biases.resize(nk);
    p.act_logits.resize(nk, kNumActivations);
    p.neuron_mask = Vector::Ones(nk);
    for (Eigen::Index c = 0; c < nk; ++c) {
      for (std::size_t r = 0; r < prev_keep.size(); ++r) p.weights(static_cast<Eigen::Index>(r), c) = l.weights(prev_keep[r], keep[c]);
      p.biases(c) = l.biases(keep[c]);
      p.act_logits.row(c) = l.act_logits.row(keep[c]);
    }
    out.layers.push_back(std::move(p));
    prev_keep = std::move(keep);
  }
  out.output_weights.resize(static_cast<Eigen::Index>(prev_keep.size()), mlp.output_dim);
  for (std::size_t r = 0; r < prev_keep.size(); ++r) out.output_weights.row(static_cast<Eigen::Index>(r)) = mlp.output_weights.row(prev_keep[r]);
  out.output_biases = mlp.output_biases;
  return out;
}

MlpVars bind_mlp(ad::Tape& tape, const Mlp& mlp, bool requires_grad) {
  mlp.validate();
  auto make = [&](Matrix m) { return requires_grad ? tape.variable(std::move(m)) : tape.constant(std::move(m)); };
  MlpVars v;
  v.input_dim = mlp.input_dim;
  v.output_dim = mlp.output_dim;
  for (const auto& l : mlp.layers) {
    MlpVars::Layer lv;
    lv.weights = make(l.weights);
    lv.biases = make(l.biases.transpose());
    lv.act_logits = make(l.act_logits);
    lv.neuron_mask = make(l.neuron_mask.transpose());
    v.layers.push_back(lv);
  }
  v.output_weights = make(mlp.output_weights);
  v.output_biases = make(mlp.output_biases.transpose());
  return v;
}

Mlp mlp_values(const MlpVars& vars) {
  Mlp m;
  m.input_dim = vars.input_dim;
  m.output_dim = vars.output_dim;
  for (const auto& lv : vars.layers) {
    HiddenLayer l;
    l.weights = lv.weights.value();
    l.biases = lv.biases.value().transpose();
    l.act_logits = lv.act_logits.value();
    l.neuron_mask = lv.neuron_mask.value().transpose();
    m.layers.push_back(std::move(l));
  }
  m.output_weights = vars.output_weights.value();
  m.output_biases = vars.output_biases.value().transpose();
  return m;
}

ad::Var eval_mlp(const MlpVars& mlp, ad::Var xs, const EvalConfig& cfg) {
  cfg.validate();
  require(xs.cols() == mlp.input_dim, ErrorKind::Shape, "eval_mlp: input column count mismatch");
  ad::Var h = xs;
  for (const auto& l : mlp.layers) {
    ad::Var pre = ad::add(ad::matmul(h, l.weights), l.biases);
    const auto width = l.biases.cols();
    ad::Var out;
    if (cfg.mask_mode == MaskMode::Hard) {
      // Argmax activation and binary gate are piecewise constant in the logits and mask.
      const Matrix& logits = l.act_logits.value();
      const Matrix& mask = l.neuron_mask.value();
      std::vector<ad::Var> cols;
      cols.reserve(static_cast<std::size_t>(width));
      for (Eigen::Index j = 0; j < width; ++j) {
        ad::Var c = ad::slice(pre, 0, j, pre.rows(), 1);
        switch (argmax_activation(logits.row(j))) {
          case ActivationKind::LeakyRelu: c = ad::leaky_relu(c, cfg.leaky_slope); break;
          case ActivationKind::Tanh: c = ad::tanh(c); break;
          case ActivationKind::Sigmoid: c = ad::sigmoid(c); break;
        }
        if (mask(0, j) < cfg.neuron_threshold) c = ad::scale(c, 0.0);
        cols.push_back(c);
      }
      out = width == 0 ? pre : ad::concat_cols(cols);
    } else {
      ad::Var alpha = ad::softmax_rows(ad::scale(l.act_logits, 1.0 / cfg.temperature));
      ad::Var alpha_t = ad::transpose(alpha);  // kNumActivations x width
      ad::Var mixed = ad::mul(ad::leaky_relu(pre, cfg.leaky_slope), ad::slice(alpha_t, 0, 0, 1, width));
      mixed = ad::add(mixed, ad::mul(ad::tanh(pre), ad::slice(alpha_t, 1, 0, 1, width)));
      mixed = ad::add(mixed, ad::mul(ad::sigmoid(pre), ad::slice(alpha_t, 2, 0, 1, width)));
      ad::Var gate = ad::sigmoid(ad::scale(ad::add_scalar(l.neuron_mask, -cfg.neuron_threshold), cfg.mask_sharpness));
      out = ad::mul(mixed, gate);
    }
    h = out;
  }
  return ad::add(ad::matmul(h, mlp.output_weights), mlp.output_biases);
}

}  // namespace swatnn

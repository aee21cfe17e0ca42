#pragma once

// Feed-forward networks with per-neuron activation mixtures and soft neuron masks.

#include "swatnn/autodiff.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace swatnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ActivationKind : int { LeakyRelu = 0, Tanh = 1, Sigmoid = 2 };
inline constexpr int kNumActivations = 3;
inline constexpr std::array<ActivationKind, kNumActivations> kAllActivations = {
    ActivationKind::LeakyRelu, ActivationKind::Tanh, ActivationKind::Sigmoid};

// Logit assigned to the selected activation of a concrete network; the others are 0.
inline constexpr double kSaturatedLogit = 10.0;
inline constexpr double kDefaultLeakySlope = 0.01;

std::string_view activation_name(ActivationKind kind);
ActivationKind activation_from_name(std::string_view name);

struct HiddenLayer {
  Matrix weights;     // fan_in x width
  Vector biases;      // width
  Matrix act_logits;  // width x kNumActivations
  Vector neuron_mask; // width, entries in [0, 1]

  int width() const { return static_cast<int>(biases.size()); }
};

struct Mlp {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<HiddenLayer> layers;
  Matrix output_weights;  // last width x output_dim
  Vector output_biases;   // output_dim

  int depth() const { return static_cast<int>(layers.size()); }
  int fan_in(int layer) const { return layer == 0 ? input_dim : layers[layer - 1].width(); }
  // Throws ErrorKind::Shape on chain incompatibility or out-of-range masks.
  void validate() const;
  // Number of weight entries (biases excluded).
  int weight_count() const;
};

bool operator==(const HiddenLayer& a, const HiddenLayer& b);
bool operator==(const Mlp& a, const Mlp& b);

// A concrete layer: one activation per neuron, all neurons active.
HiddenLayer make_hard_layer(Matrix weights, Vector biases, const std::vector<ActivationKind>& acts);
Matrix saturated_logits(const std::vector<ActivationKind>& acts);
// Argmax with ties resolved toward the lower index.
ActivationKind argmax_activation(const Eigen::Ref<const Eigen::RowVectorXd>& logits);

enum class MaskMode { Soft, Hard };

// Hard mode is test-time semantics: binary neuron gates and argmax activations.
struct EvalConfig {
  double temperature = 1.0;
  double leaky_slope = kDefaultLeakySlope;
  MaskMode mask_mode = MaskMode::Soft;
  double mask_sharpness = 20.0;
  double neuron_threshold = 0.5;

  void validate() const;
};

double activation_apply(ActivationKind kind, double x, double leaky_slope = kDefaultLeakySlope);
// softmax(logits / temperature)
std::array<double, kNumActivations> mixture_weights(const std::array<double, kNumActivations>& logits,
                                                    double temperature);
double neuron_output(double pre_activation, const std::array<double, kNumActivations>& logits, double temperature,
                     double leaky_slope = kDefaultLeakySlope);
double soft_neuron_gate(double mask_value, MaskMode mode, double threshold, double sharpness);

// xs: batch x input_dim; returns batch x output_dim.
Matrix eval_mlp(const Mlp& mlp, const Matrix& xs, const EvalConfig& cfg);

// Removes neurons whose mask is below the threshold and sets survivors' masks to 1.
// A layer with no survivors becomes width 0.
Mlp prune_inactive(const Mlp& mlp, double threshold = 0.5);

// Graph form of an Mlp for differentiable evaluation. Biases and masks are rows.
struct MlpVars {
  struct Layer {
    ad::Var weights;      // fan_in x width
    ad::Var biases;       // 1 x width
    ad::Var act_logits;   // width x kNumActivations
    ad::Var neuron_mask;  // 1 x width
  };
  int input_dim = 0;
  int output_dim = 0;
  std::vector<Layer> layers;
  ad::Var output_weights;  // width x output_dim
  ad::Var output_biases;   // 1 x output_dim
};

MlpVars bind_mlp(ad::Tape& tape, const Mlp& mlp, bool requires_grad);
// Reads back current values of a graph-form network.
Mlp mlp_values(const MlpVars& vars);
ad::Var eval_mlp(const MlpVars& mlp, ad::Var xs, const EvalConfig& cfg);

}  // namespace swatnn

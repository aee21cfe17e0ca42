#pragma once

// Comparison methods: direct training of a fixed architecture and ADMM pruning.

#include "swatnn/bench.hpp"
#include "swatnn/matrep.hpp"
#include "swatnn/netcore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace swatnn {

struct Architecture {
  int depth = 1;
  int width = 5;
  ActivationKind activation = ActivationKind::Tanh;
};

// "depth,width,activation", e.g. "2,4,tanh".
Architecture parse_architecture(const std::string& text);
std::string format_architecture(const Architecture& arch);

struct TraditionalConfig {
  int epochs = 6000;
  double lr = 0.01;
  std::uint64_t seed = 0;
  double init_range = 0.5;
  double divergence_threshold = 1e6;

  void validate() const;
};

struct AdmmConfig {
  double rho = 2.0;
  double threshold = 0.1;
  int outer_iters = 20;
  int inner_steps = 200;
  double inner_lr = 0.01;
  int finetune_steps = 500;
  double divergence_threshold = 1e6;

  void validate() const;
};

struct BaselineResult {
  Mlp mlp;
  double train_mse = 0.0;
  double test_mse = 0.0;
  int nonzeros = 0;
  std::vector<int> active_neurons;
  std::vector<double> trajectory;  // training MSE per step
  bool diverged = false;
  // Input network metrics (pruning only).
  double train_mse_before = 0.0;
  double test_mse_before = 0.0;
  int nonzeros_before = 0;
};

// Uniform weights in [-init_range, init_range], zero biases, one activation throughout.
Mlp init_traditional(const Architecture& arch, int input_dim, int output_dim, std::uint64_t seed, double init_range);

// Full-batch gradient descent on the training MSE.
BaselineResult train_traditional(const Architecture& arch, const TaskDataset& data, const TraditionalConfig& cfg,
                                 const RepLayout& layout = {});

// Zero every entry with magnitude below the threshold.
Vector admm_project(const Vector& w, double threshold);
Matrix admm_project(const Matrix& w, double threshold);

// W-step: inner gradient steps on MSE + rho/2 ||W - Z + U||^2; Z-step: projection of
// W + U; dual update U += W - Z. The final Z pattern is applied and surviving
// weights are fine-tuned. Weights that start at zero stay zero.
BaselineResult admm_prune(const Mlp& mlp, const TaskDataset& data, const AdmmConfig& cfg);

}  // namespace swatnn

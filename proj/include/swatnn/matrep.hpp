#pragma once

// Fixed-size two-channel matrix representation of an Mlp.
//
// Row h gathers everything attached to neuron h of every layer. Columns are laid
// out left to right as
//
//   [W_1 | b_1 | F_1] ... [W_L | b_L | F_L] [W_out | b_out] [M]
//
// where W_j holds the weights entering hidden layer j (row = source neuron),
// b_j the biases of layer j, F_j the activation one-hot rows, and M one column
// per hidden layer of neuron indicators. The validity channel marks real entries;
// padding is exactly zero in the value channel.

#include "swatnn/netcore.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>

namespace swatnn {

struct RepLayout {
  int max_neurons = 5;        // N
  int max_hidden_layers = 2;  // L
  int num_activations = kNumActivations;
  int input_dim_max = 5;
  int output_dim_max = 5;

  int columns() const { return (max_hidden_layers + 1) * (max_neurons + 1) + max_hidden_layers * num_activations + max_hidden_layers; }
  int hidden_block(int layer) const { return layer * (max_neurons + 1 + num_activations); }
  int bias_column(int layer) const { return hidden_block(layer) + max_neurons; }
  int activation_column(int layer) const { return hidden_block(layer) + max_neurons + 1; }
  int output_block() const { return max_hidden_layers * (max_neurons + 1 + num_activations); }
  int output_bias_column() const { return output_block() + max_neurons; }
  int mask_column(int layer) const { return output_block() + max_neurons + 1 + layer; }

  void validate() const;
  bool operator==(const RepLayout&) const = default;
};

struct MatRep {
  Matrix values;    // N x C
  Matrix validity;  // N x C, entries 0 or 1
};

MatRep pack(const Mlp& mlp, const RepLayout& layout);

// Reads the first `hidden_layers` blocks and the output block. Layer widths and
// boundary dimensions come from the validity channel. With hard = true the
// neuron indicators are binarized at `threshold` and activation rows become
// saturated one-hot logits of their argmax; otherwise values are taken as
// logits and clamped masks.
Mlp unpack(const MatRep& rep, const RepLayout& layout, int hidden_layers, bool hard, double threshold = 0.5);

// Validity channel of a full-width network with the given depth and boundary sizes.
Matrix structural_validity(const RepLayout& layout, int hidden_layers, int input_dim, int output_dim);

// Differentiable soft unpack of a full-width network from an N x C value node.
MlpVars unpack_vars(ad::Var values, const RepLayout& layout, int hidden_layers, int input_dim, int output_dim);

struct SampleOptions {
  std::pair<int, int> depth_range{1, 2};
  std::pair<int, int> width_range{1, 5};
  std::pair<int, int> input_dim_range{2, 2};
  std::pair<int, int> output_dim_range{1, 1};
  double weight_bound = 5.0;
  double bias_bound = 1.0;
};

// Concrete network with uniform weights/biases, uniform depth, widths and
// per-neuron activations. Deterministic in the seed.
Mlp sample_random_mlp(const RepLayout& layout, std::uint64_t seed, const SampleOptions& opts = {});

// Binary codec: magic, version, N, C, L, A (u32, little-endian), row-major f64
// values, then validity bits packed row-major, least significant bit first.
void write_matrep(std::ostream& out, const MatRep& rep, const RepLayout& layout);
MatRep read_matrep(std::istream& in, RepLayout* layout_out = nullptr);

}  // namespace swatnn

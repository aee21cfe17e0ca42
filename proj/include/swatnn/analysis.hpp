#pragma once

// Latent smoothness probe, Pareto summaries and deep-network compression.

#include "swatnn/autoenc.hpp"
#include "swatnn/latentopt.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace swatnn {

struct PcaResult {
  Vector v1, v2;
  double lambda1 = 0.0, lambda2 = 0.0;
  bool rank_deficient = false;  // v2 completed from the null space
};

// Top two principal directions of the centered rows by power iteration with
// deflation. Each vector's largest-magnitude coordinate is made positive.
PcaResult pca_top2(const Matrix& samples, int iterations = 1000, double tol = 1e-10);

struct SmoothnessConfig {
  int n_neighbors = 200;
  double noise_std = 0.1;
  double grid_step = 0.25;
  double grid_range = 3.0;
  int n_inputs = 1024;
  std::uint64_t seed = 0;
  int input_dim = 2;
  int output_dim = 1;
  int threads = 1;

  void validate() const;
};

struct SmoothnessGrid {
  Embedding base;
  Vector v1, v2;  // unit directions over the flattened (row-major) embedding
  std::vector<double> alphas, betas;
  Matrix mse;  // alphas x betas
  bool rank_deficient = false;
};

// z + a * v1 + b * v2 with the directions reshaped to the embedding shape.
Embedding offset_embedding(const Embedding& z, const Vector& v1, double a, const Vector& v2, double b);

SmoothnessGrid smoothness_probe(const AutoencoderModel& model, int decoder, const SmoothnessConfig& cfg);

struct ParetoPoint {
  double mse = 0.0;
  int nonzeros = 0;
  int index = 0;  // caller's identifier
};

// Points not dominated under joint minimization, sorted by nonzeros then mse.
std::vector<ParetoPoint> pareto_extract(const std::vector<ParetoPoint>& points);

// front: layers 1..cut with an identity output block; back: the remaining layers.
std::pair<Mlp, Mlp> split_mlp(const Mlp& deep, int cut);
// Folds front's affine output into back's first layer.
Mlp compose_mlps(const Mlp& front, const Mlp& back);

// Concrete deep network with uniform widths in width_range, weights uniform in
// [-weight_bound, weight_bound] and biases in [-bias_bound, bias_bound].
Mlp sample_deep_mlp(std::uint64_t seed, int depth, std::pair<int, int> width_range, int input_dim, int output_dim,
                    double weight_bound = 1.0, double bias_bound = 0.5);

struct CompressConfig {
  std::vector<int> cuts;           // 1-based cut layers, strictly increasing
  std::vector<int> target_depths;  // one per part
  SearchConfig search;
  int train_inputs = 2000;
  int test_inputs = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PartReport {
  int index = 0;
  int original_depth = 0;
  int target_depth = 0;
  int input_dim = 0;
  int output_dim = 0;
  double search_train_mse = 0.0;  // normalized units
  double search_test_mse = 0.0;
  double teacher_mse = 0.0;  // original units on held-out part inputs
  int nonzeros = 0;
  std::vector<double> trajectory;
  Mlp compressed;  // original units
};

struct CompressReport {
  Mlp compressed;
  std::vector<PartReport> parts;
  std::vector<double> interface_mse;  // composed compressed prefix vs teacher at each cut
  double output_mse = 0.0;
  double relative_output_mse = 0.0;  // output_mse / variance of the teacher output
  int original_depth = 0;
  int compressed_depth = 0;
  int original_nonzeros = 0;
  int compressed_nonzeros = 0;
};

// Each part is searched against its own teacher input/output pairs with the
// search decoder fixed to its target depth, then the parts are composed.
CompressReport compress(const Mlp& deep, const AutoencoderModel& model, const CompressConfig& cfg);

// Aggregates result JSON documents into summary.csv, best.csv and pareto.csv.
void write_report(const std::vector<std::string>& result_files, const std::string& out_dir);

}  // namespace swatnn

#pragma once

// Gradient search over the latent space of a frozen autoencoder.

#include "swatnn/autoenc.hpp"
#include "swatnn/bench.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace swatnn {

struct PenaltyConfig {
  double lambda_s = 0.0;
  double mu_1 = 0.1;
  double mu_c = 0.01;
  double alpha = 0.0;
  double beta = 0.0;
  double t_s_init = 0.05;
  double t_n = 0.5;
  double soft_scale = 20.0;
  // Single sigmoid of the aggregate L1 distance instead of the per-weight soft count.
  bool aggregate_soft_count = false;

  void validate() const;
};

enum class PenaltyLevel { None, Small, Medium, Large };
PenaltyConfig penalty_preset(PenaltyLevel level);
PenaltyLevel penalty_level_from_name(const std::string& name);
std::string penalty_level_name(PenaltyLevel level);

struct AnnealSchedule {
  double t_init = 1.0;
  double t_final = 0.01;
  int e_anneal = 3000;

  void validate() const;
};

// max(T_final, T_init * (1 - e / E_anneal))
double temperature(long epoch, const AnnealSchedule& sched);

enum class SearchOptimizer { GradientDescent, Adam };

struct SearchConfig {
  int steps = 2000;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::vector<int> decoder_set;  // 1-based; empty means all decoders
  PenaltyConfig penalties;
  AnnealSchedule anneal;
  double selection_tolerance = 0.05;
  SearchOptimizer optimizer = SearchOptimizer::GradientDescent;
  double divergence_threshold = 1e6;
  int threads = 1;

  void validate(int decoders) const;
  std::vector<int> decoders(int available) const;
};

// Plain forms.
double sparsity_penalty(const Vector& w, double t_s, const PenaltyConfig& cfg);
Vector soft_weight_mask(const Vector& w, double t_s, double soft_scale, MaskMode mode);
// masks[i] holds the soft indicators of hidden layer i.
double compactness_penalty(const std::vector<Vector>& masks, double alpha, double beta);

// Graph forms; t_s is 1x1. The penalty sums over every entry of every weight node.
ad::Var sparsity_penalty(const std::vector<ad::Var>& weights, ad::Var t_s, const PenaltyConfig& cfg);
ad::Var soft_weight_mask(ad::Var w, ad::Var t_s, double soft_scale);
ad::Var compactness_penalty(const std::vector<ad::Var>& masks, double alpha, double beta);

struct SearchLoss {
  ad::Var total;
  ad::Var data;         // mean squared error
  ad::Var sparsity;     // P_s before lambda_s
  ad::Var compactness;  // P_n
};

// Decode, soft-unpack, mask weights, evaluate with soft gates at T(epoch) and
// add the penalties. Differentiable in z and t_s.
SearchLoss search_loss_graph(const BoundModel& model, int decoder, ad::Var z, ad::Var t_s, const Matrix& xs,
                             const Matrix& ys, long epoch, const SearchConfig& cfg);
double search_loss(const AutoencoderModel& model, int decoder, const Embedding& z, double t_s, const Matrix& xs,
                   const Matrix& ys, long epoch, const SearchConfig& cfg);

// Hard weight mask at t_s, neurons binarized at t_n, argmax activations, inactive
// neurons removed.
Mlp harden(const MatRep& decoded, const RepLayout& layout, int decoder, double t_s, double t_n);
int nonzero_weights(const Mlp& mlp);
std::vector<int> active_neurons(const Mlp& mlp);
double mse(const Mlp& mlp, const Matrix& xs, const Matrix& ys);  // hard evaluation

struct DecoderResult {
  int decoder = 1;
  Embedding z;
  double t_s = 0.0;
  Mlp mlp;  // hardened
  double train_mse = 0.0;
  double test_mse = 0.0;
  int nonzeros = 0;
  std::vector<int> active_neurons;
  std::vector<double> trajectory;  // search loss per step
  int steps_run = 0;
  bool diverged = false;
};

struct SearchResult {
  std::vector<DecoderResult> per_decoder;
  int selected = -1;  // index into per_decoder, -1 if every run diverged
};

DecoderResult search_decoder(const AutoencoderModel& model, const TaskDataset& data, const SearchConfig& cfg,
                             int decoder);
SearchResult run_search(const AutoencoderModel& model, const TaskDataset& data, const SearchConfig& cfg);

struct Candidate {
  double mse = 0.0;
  int nonzeros = 0;
  bool diverged = false;
};

// Keep candidates with mse <= (1 + tolerance) * min mse, then take the fewest
// nonzeros; ties go to lower mse, then lower index. Throws ErrorKind::NoResult if
// nothing finite remains.
int select_best(const std::vector<Candidate>& candidates, double tolerance = 0.05);
int select_best(const std::vector<DecoderResult>& results, double tolerance = 0.05);

}  // namespace swatnn

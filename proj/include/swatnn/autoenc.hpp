#pragma once

// Multi-scale autoencoder over matrix-represented networks.
//
// One attention encoder maps the N row tokens of a representation to an N x d
// embedding. Decoder k (1-based) reads the embedding as a bidirectional prefix and
// rolls out N rows autoregressively from a learned start token, feeding each
// continuous output row back as the next input. Unpacking the first k hidden
// blocks of its output yields a k-hidden-layer network.

#include "swatnn/autodiff.hpp"
#include "swatnn/matrep.hpp"
#include "swatnn/netcore.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace swatnn {

using Embedding = Matrix;  // tokens x d_model

enum class Precision { F64, F32 };

struct AutoencoderConfig {
  int d_model = 128;
  int n_heads = 4;
  int n_layers = 2;  // blocks per encoder and per decoder
  RepLayout layout{};
  // Boundary sizes used when decoding without explicit sizes.
  int input_dim = 2;
  int output_dim = 1;
  // Storage precision of checkpoints. Arithmetic is always double.
  Precision precision = Precision::F64;
  // Route the min-loss gradient through a softmin over all branches instead of the argmin.
  bool soft_min = false;
  double soft_min_temperature = 1.0;

  int tokens() const { return layout.max_neurons; }
  int decoders() const { return layout.max_hidden_layers; }
  void validate() const;
};

struct Param {
  std::string name;
  Matrix value;
};

class AutoencoderModel {
 public:
  // Randomly initialized model (GPT-2 style initialization), deterministic in the seed.
  AutoencoderModel(const AutoencoderConfig& config, std::uint64_t seed);

  const AutoencoderConfig& config() const { return config_; }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::size_t parameter_count() const;

  // Indices into params() for each component.
  struct BlockIndex {
    int ln1_gain, ln1_bias, qkv_w, qkv_b, proj_w, proj_b, ln2_gain, ln2_bias, fc_w, fc_b, out_w, out_b;
  };
  struct EncoderIndex {
    int in_w, in_b, pos;
    std::vector<BlockIndex> blocks;
    int lnf_gain, lnf_bias;
  };
  struct DecoderIndex {
    int start, prefix_pos, gen_pos, in_w, in_b;
    std::vector<BlockIndex> blocks;
    int lnf_gain, lnf_bias, head_w, head_b;
  };
  const EncoderIndex& encoder_index() const { return encoder_; }
  const DecoderIndex& decoder_index(int k) const { return decoders_.at(static_cast<std::size_t>(k - 1)); }

 private:
  int add(std::string name, Matrix value);

  AutoencoderConfig config_;
  std::vector<Param> params_;
  EncoderIndex encoder_;
  std::vector<DecoderIndex> decoders_;
};

// Parameters bound onto a tape. Trainable bindings report gradients by param slot.
class BoundModel {
 public:
  BoundModel(ad::Tape& tape, const AutoencoderModel& model, bool trainable);
  ad::Var operator[](int index) const { return vars_[static_cast<std::size_t>(index)]; }
  const AutoencoderModel& model() const { return *model_; }
  ad::Tape& tape() const { return *tape_; }

 private:
  ad::Tape* tape_;
  const AutoencoderModel* model_;
  std::vector<ad::Var> vars_;
};

// Encoder input: values and validity side by side, N x 2C.
Matrix encoder_input(const MatRep& rep);

ad::Var tokenize(const BoundModel& m, ad::Var encoder_input);
ad::Var encode(const BoundModel& m, ad::Var encoder_input);
// N x C decoded values; the neuron-indicator columns pass through a sigmoid.
ad::Var decode(const BoundModel& m, int decoder, ad::Var z);

Matrix tokenize(const AutoencoderModel& model, const MatRep& rep);
Embedding encode(const AutoencoderModel& model, const MatRep& rep);
// Validity is structural for the requested boundary sizes (config defaults if < 1).
MatRep decode(const AutoencoderModel& model, int decoder, const Embedding& z, int input_dim = 0, int output_dim = 0);

EvalConfig source_eval_config();
EvalConfig decoded_eval_config();

// Sum over inputs of the squared output difference.
double functional_loss(const Mlp& source, const Mlp& decoded, const Matrix& xs,
                       const EvalConfig& source_cfg = source_eval_config(),
                       const EvalConfig& decoded_cfg = decoded_eval_config());

struct MinLossResult {
  double loss = 0.0;
  int decoder = 1;  // 1-based argmin, ties toward the smaller index
  std::vector<double> per_decoder;
};

MinLossResult min_loss(const Mlp& source, const AutoencoderModel& model, const Matrix& xs);

// Graph form used by training: returns the selected branch loss node.
struct MinLossGraph {
  ad::Var objective;
  MinLossResult result;
};
MinLossGraph min_loss_graph(const BoundModel& m, const Mlp& source, const Matrix& xs);

struct TrainSpec {
  int epochs = 1;
  int batches_per_epoch = 2000;
  int batch_size = 32;
  int inputs_per_mlp = 256;
  double lr = 1e-4;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
  int checkpoint_every = 0;  // batches; 0 disables periodic checkpoints
  SampleOptions sample{};
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  std::vector<double> per_decoder_win_rate;
};

struct TrainMetrics {
  std::vector<EpochRecord> epochs;
  std::vector<double> batch_losses;
  int divergence_warnings = 0;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  // reason is "periodic", "final" or "diverged".
  std::function<void(const AutoencoderModel&, long batch, const std::string& reason)> on_checkpoint;
  std::function<void(long batch, double loss)> on_batch;
};

struct TrainResult {
  AutoencoderModel model;
  TrainMetrics metrics;
};

// Throws ErrorKind::Diverged on a non-finite batch loss after emitting a "diverged" checkpoint.
TrainResult train_autoencoder(const AutoencoderConfig& config, const TrainSpec& spec, const TrainHooks& hooks = {});
// Continues training an existing model.
TrainMetrics train_autoencoder(AutoencoderModel& model, const TrainSpec& spec, const TrainHooks& hooks = {});

// Mean min-loss over `count` networks drawn from an independent seeded stream.
double heldout_loss(const AutoencoderModel& model, std::uint64_t seed, int count, int inputs_per_mlp,
                    const SampleOptions& sample = {});

// Uniform inputs in [-1, 1]^dim.
Matrix sample_inputs(std::uint64_t seed, int count, int dim);

void save_checkpoint(std::ostream& out, const AutoencoderModel& model);
AutoencoderModel load_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const AutoencoderModel& model);
AutoencoderModel load_checkpoint(const std::string& path);

}  // namespace swatnn

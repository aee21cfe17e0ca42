#include "swatnn/autoenc.hpp"

#include "swatnn/binio.hpp"
#include "swatnn/config.hpp"
#include "swatnn/error.hpp"
#include "swatnn/rng.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace swatnn {

void AutoencoderConfig::validate() const {
  layout.validate();
  require(d_model > 0 && n_heads > 0 && d_model % n_heads == 0, ErrorKind::Config,
          "autoencoder: d_model must be a positive multiple of n_heads");
  require(n_layers >= 1, ErrorKind::Config, "autoencoder: n_layers must be >= 1");
  require(input_dim >= 1 && input_dim <= layout.input_dim_max && output_dim >= 1 && output_dim <= layout.output_dim_max,
          ErrorKind::Config, "autoencoder: default boundary sizes exceed layout");
  require(soft_min_temperature > 0.0, ErrorKind::Config, "autoencoder: soft_min_temperature must be > 0");
}

int AutoencoderModel::add(std::string name, Matrix value) {
  params_.push_back({std::move(name), std::move(value)});
  return static_cast<int>(params_.size()) - 1;
}

AutoencoderModel::AutoencoderModel(const AutoencoderConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed, "ae-init");
  const int d = config_.d_model;
  const int n = config_.tokens();
  const int c = config_.layout.columns();
  const double proj_std = 0.02 / std::sqrt(2.0 * config_.n_layers);
  auto normal = [&](int rows, int cols, double std) {
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = rng.normal(0.0, std);
    return m;
  };
  auto block = [&](const std::string& p) {
    BlockIndex b{};
    b.ln1_gain = add(p + ".ln1.gain", Matrix::Ones(1, d));
    b.ln1_bias = add(p + ".ln1.bias", Matrix::Zero(1, d));
    b.qkv_w = add(p + ".attn.qkv.w", normal(d, 3 * d, 0.02));
    b.qkv_b = add(p + ".attn.qkv.b", Matrix::Zero(1, 3 * d));
    b.proj_w = add(p + ".attn.proj.w", normal(d, d, proj_std));
    b.proj_b = add(p + ".attn.proj.b", Matrix::Zero(1, d));
    b.ln2_gain = add(p + ".ln2.gain", Matrix::Ones(1, d));
    b.ln2_bias = add(p + ".ln2.bias", Matrix::Zero(1, d));
    b.fc_w = add(p + ".mlp.fc.w", normal(d, 4 * d, 0.02));
    b.fc_b = add(p + ".mlp.fc.b", Matrix::Zero(1, 4 * d));
    b.out_w = add(p + ".mlp.out.w", normal(4 * d, d, proj_std));
    b.out_b = add(p + ".mlp.out.b", Matrix::Zero(1, d));
    return b;
  };

  encoder_.in_w = add("enc.in.w", normal(2 * c, d, 0.02));
  encoder_.in_b = add("enc.in.b", Matrix::Zero(1, d));
  encoder_.pos = add("enc.pos", normal(n, d, 0.01));
  for (int b = 0; b < config_.n_layers; ++b) encoder_.blocks.push_back(block("enc.block" + std::to_string(b)));
  encoder_.lnf_gain = add("enc.lnf.gain", Matrix::Ones(1, d));
  encoder_.lnf_bias = add("enc.lnf.bias", Matrix::Zero(1, d));

  for (int k = 1; k <= config_.decoders(); ++k) {
    const std::string p = "dec" + std::to_string(k);
    DecoderIndex di;
    di.start = add(p + ".start", normal(1, d, 0.02));
    di.prefix_pos = add(p + ".prefix_pos", normal(n, d, 0.01));
    di.gen_pos = add(p + ".gen_pos", normal(n, d, 0.01));
    di.in_w = add(p + ".in.w", normal(c, d, 0.02));
    di.in_b = add(p + ".in.b", Matrix::Zero(1, d));
    for (int b = 0; b < config_.n_layers; ++b) di.blocks.push_back(block(p + ".block" + std::to_string(b)));
    di.lnf_gain = add(p + ".lnf.gain", Matrix::Ones(1, d));
    di.lnf_bias = add(p + ".lnf.bias", Matrix::Zero(1, d));
    di.head_w = add(p + ".head.w", normal(d, c, 0.02));
    di.head_b = add(p + ".head.b", Matrix::Zero(1, c));
    decoders_.push_back(std::move(di));
  }
}

std::size_t AutoencoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

BoundModel::BoundModel(ad::Tape& tape, const AutoencoderModel& model, bool trainable) : tape_(&tape), model_(&model) {
  const auto& ps = model.params();
  vars_.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) vars_.push_back(tape.external(ps[i].value, trainable, static_cast<int>(i)));
}

Matrix encoder_input(const MatRep& rep) {
  Matrix x(rep.values.rows(), rep.values.cols() * 2);
  x << rep.values, rep.validity;
  return x;
}

namespace {

struct KvCache {
  ad::Var keys;
  ad::Var values;
};

ad::Var affine_norm(const BoundModel& m, ad::Var x, int gain, int bias) {
  return ad::add(ad::mul(ad::layer_norm_rows(x), m[gain]), m[bias]);
}

// Pre-norm transformer block. Chunk rows attend to every cached row and to each other.
ad::Var block_forward(const BoundModel& m, const AutoencoderModel::BlockIndex& b, ad::Var x, KvCache* cache) {
  const auto& cfg = m.model().config();
  const int d = cfg.d_model;
  const int heads = cfg.n_heads;
  const int dh = d / heads;
  const ad::Index rows = x.rows();

  ad::Var h = affine_norm(m, x, b.ln1_gain, b.ln1_bias);
  ad::Var qkv = ad::add(ad::matmul(h, m[b.qkv_w]), m[b.qkv_b]);
  ad::Var q = ad::slice(qkv, 0, 0, rows, d);
  ad::Var k = ad::slice(qkv, 0, d, rows, d);
  ad::Var v = ad::slice(qkv, 0, 2 * d, rows, d);
  if (cache) {
    if (cache->keys.valid()) {
      k = ad::concat_rows({cache->keys, k});
      v = ad::concat_rows({cache->values, v});
    }
    cache->keys = k;
    cache->values = v;
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<ad::Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int hd = 0; hd < heads; ++hd) {
    ad::Var qh = ad::slice(q, 0, hd * dh, rows, dh);
    ad::Var kh = ad::slice(k, 0, hd * dh, k.rows(), dh);
    ad::Var vh = ad::slice(v, 0, hd * dh, v.rows(), dh);
    ad::Var att = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt));
    outs.push_back(ad::matmul(att, vh));
  }
  ad::Var att = ad::add(ad::matmul(ad::concat_cols(outs), m[b.proj_w]), m[b.proj_b]);
  x = ad::add(x, att);
  ad::Var h2 = affine_norm(m, x, b.ln2_gain, b.ln2_bias);
  ad::Var f = ad::gelu(ad::add(ad::matmul(h2, m[b.fc_w]), m[b.fc_b]));
  f = ad::add(ad::matmul(f, m[b.out_w]), m[b.out_b]);
  return ad::add(x, f);
}

}  // namespace

ad::Var tokenize(const BoundModel& m, ad::Var encoder_input) {
  const auto& e = m.model().encoder_index();
  return ad::add(ad::matmul(encoder_input, m[e.in_w]), m[e.in_b]);
}

ad::Var encode(const BoundModel& m, ad::Var encoder_input) {
  const auto& cfg = m.model().config();
  require(encoder_input.rows() == cfg.tokens() && encoder_input.cols() == 2 * cfg.layout.columns(), ErrorKind::Shape,
          "encode: input does not match layout");
  const auto& e = m.model().encoder_index();
  ad::Var x = ad::add(tokenize(m, encoder_input), m[e.pos]);
  for (const auto& b : e.blocks) x = block_forward(m, b, x, nullptr);
  return affine_norm(m, x, e.lnf_gain, e.lnf_bias);
}

ad::Var decode(const BoundModel& m, int decoder, ad::Var z) {
  const auto& cfg = m.model().config();
  require(decoder >= 1 && decoder <= cfg.decoders(), ErrorKind::Config, "decode: decoder index out of range");
  require(z.rows() == cfg.tokens() && z.cols() == cfg.d_model, ErrorKind::Shape, "decode: embedding shape mismatch");
  const auto& di = m.model().decoder_index(decoder);
  const int n = cfg.tokens();
  const int c = cfg.layout.columns();
  const int d = cfg.d_model;

  std::vector<KvCache> caches(di.blocks.size());
  ad::Var x = ad::add(z, m[di.prefix_pos]);
  for (std::size_t b = 0; b < di.blocks.size(); ++b) x = block_forward(m, di.blocks[b], x, &caches[b]);

  ad::Var token = ad::add(m[di.start], ad::slice(m[di.gen_pos], 0, 0, 1, d));
  std::vector<ad::Var> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    ad::Var y = token;
    for (std::size_t b = 0; b < di.blocks.size(); ++b) y = block_forward(m, di.blocks[b], y, &caches[b]);
    ad::Var row = ad::add(ad::matmul(affine_norm(m, y, di.lnf_gain, di.lnf_bias), m[di.head_w]), m[di.head_b]);
    rows.push_back(row);
    if (t + 1 < n)
      token = ad::add(ad::add(ad::matmul(row, m[di.in_w]), m[di.in_b]), ad::slice(m[di.gen_pos], t + 1, 0, 1, d));
  }
  ad::Var raw = ad::concat_rows(rows);
  const int mask_col = cfg.layout.mask_column(0);
  return ad::concat_cols({ad::slice(raw, 0, 0, n, mask_col), ad::sigmoid(ad::slice(raw, 0, mask_col, n, c - mask_col))});
}

Matrix tokenize(const AutoencoderModel& model, const MatRep& rep) {
  ad::Tape tape;
  BoundModel m(tape, model, false);
  return tokenize(m, tape.constant(encoder_input(rep))).value();
}

Embedding encode(const AutoencoderModel& model, const MatRep& rep) {
  ad::Tape tape;
  BoundModel m(tape, model, false);
  return encode(m, tape.constant(encoder_input(rep))).value();
}

MatRep decode(const AutoencoderModel& model, int decoder, const Embedding& z, int input_dim, int output_dim) {
  const auto& cfg = model.config();
  ad::Tape tape;
  BoundModel m(tape, model, false);
  MatRep rep;
  rep.values = decode(m, decoder, tape.constant(z)).value();
  rep.validity = structural_validity(cfg.layout, decoder, input_dim > 0 ? input_dim : cfg.input_dim,
                                     output_dim > 0 ? output_dim : cfg.output_dim);
  return rep;
}

EvalConfig source_eval_config() {
  EvalConfig c;
  c.mask_mode = MaskMode::Hard;
  return c;
}

EvalConfig decoded_eval_config() {
  EvalConfig c;
  c.mask_mode = MaskMode::Soft;
  c.temperature = 1.0;
  return c;
}

double functional_loss(const Mlp& source, const Mlp& decoded, const Matrix& xs, const EvalConfig& source_cfg,
                       const EvalConfig& decoded_cfg) {
  require(source.input_dim == decoded.input_dim && source.output_dim == decoded.output_dim, ErrorKind::Shape,
          "functional_loss: networks have different boundary sizes");
  const Matrix diff = eval_mlp(source, xs, source_cfg) - eval_mlp(decoded, xs, decoded_cfg);
  return diff.squaredNorm();
}

MinLossResult min_loss(const Mlp& source, const AutoencoderModel& model, const Matrix& xs) {
  const auto& cfg = model.config();
  const MatRep rep = pack(source, cfg.layout);
  const Embedding z = encode(model, rep);
  MinLossResult r;
  r.loss = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= cfg.decoders(); ++k) {
    const MatRep out = decode(model, k, z, source.input_dim, source.output_dim);
    const double l = functional_loss(source, unpack(out, cfg.layout, k, false), xs);
    r.per_decoder.push_back(l);
    if (l < r.loss) {
      r.loss = l;
      r.decoder = k;
    }
  }
  return r;
}

MinLossGraph min_loss_graph(const BoundModel& m, const Mlp& source, const Matrix& xs) {
  const auto& cfg = m.model().config();
  ad::Tape& tape = m.tape();
  const Matrix target = eval_mlp(source, xs, source_eval_config());
  ad::Var z = encode(m, tape.constant(encoder_input(pack(source, cfg.layout))));
  ad::Var x = tape.constant(xs);
  ad::Var y = tape.constant(target);
  std::vector<ad::Var> losses;
  MinLossGraph g;
  g.result.loss = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= cfg.decoders(); ++k) {
    MlpVars dec = unpack_vars(decode(m, k, z), cfg.layout, k, source.input_dim, source.output_dim);
    ad::Var l = ad::sum(ad::square(ad::sub(eval_mlp(dec, x, decoded_eval_config()), y)));
    losses.push_back(l);
    g.result.per_decoder.push_back(l.scalar());
    if (l.scalar() < g.result.loss) {
      g.result.loss = l.scalar();
      g.result.decoder = k;
    }
  }
  if (!cfg.soft_min) {
    g.objective = losses[static_cast<std::size_t>(g.result.decoder - 1)];
    return g;
  }
  // Softmin weights are treated as constants.
  std::vector<double> w(losses.size());
  double s = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    w[i] = std::exp(-(g.result.per_decoder[i] - g.result.loss) / cfg.soft_min_temperature);
    s += w[i];
  }
  ad::Var obj = ad::scale(losses[0], w[0] / s);
  for (std::size_t i = 1; i < losses.size(); ++i) obj = ad::add(obj, ad::scale(losses[i], w[i] / s));
  g.objective = obj;
  return g;
}

Matrix sample_inputs(std::uint64_t seed, int count, int dim) {
  Rng rng(seed);
  Matrix xs(count, dim);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < dim; ++j) xs(i, j) = rng.uniform(-1.0, 1.0);
  return xs;
}

namespace {

struct Adam {
  explicit Adam(const std::vector<Param>& ps) {
    for (const auto& p : ps) {
      m.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      v.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  void step(std::vector<Param>& ps, const std::vector<Matrix>& grads, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i].cwiseAbs2();
      ps[i].value.array() -= lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
    }
  }
  std::vector<Matrix> m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

std::vector<Matrix> zero_grads(const std::vector<Param>& ps) {
  std::vector<Matrix> g;
  g.reserve(ps.size());
  for (const auto& p : ps) g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return g;
}

constexpr int kGradShards = 8;

struct ShardOutput {
  std::vector<Matrix> grads;
  double loss_sum = 0.0;
  std::vector<int> wins;
};

}  // namespace

TrainMetrics train_autoencoder(AutoencoderModel& model, const TrainSpec& spec, const TrainHooks& hooks) {
  const auto& cfg = model.config();
  require(spec.epochs >= 0 && spec.batches_per_epoch >= 1 && spec.batch_size >= 1 && spec.inputs_per_mlp >= 1,
          ErrorKind::Config, "train: epochs, batches, batch size and inputs must be positive");
  require(spec.lr > 0.0, ErrorKind::Config, "train: learning rate must be > 0");
  Adam adam(model.params());
  TrainMetrics metrics;
  const double ema_alpha = 2.0 / (500.0 + 1.0);
  double ema = std::numeric_limits<double>::quiet_NaN();
  double ema_min = std::numeric_limits<double>::infinity();
  const int threads = std::max(1, spec.threads);
  long global_batch = 0;

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::vector<long> epoch_wins(static_cast<std::size_t>(cfg.decoders()), 0);
    for (int b = 0; b < spec.batches_per_epoch; ++b, ++global_batch) {
      const int shards = std::min(kGradShards, spec.batch_size);
      std::vector<ShardOutput> outs(static_cast<std::size_t>(shards));
      auto run_shard = [&](int s) {
        auto& out = outs[static_cast<std::size_t>(s)];
        out.grads = zero_grads(model.params());
        out.wins.assign(static_cast<std::size_t>(cfg.decoders()), 0);
        const int lo = s * spec.batch_size / shards;
        const int hi = (s + 1) * spec.batch_size / shards;
        ad::Tape tape;
        for (int item = lo; item < hi; ++item) {
          const auto idx = static_cast<std::uint64_t>(global_batch) * static_cast<std::uint64_t>(spec.batch_size) +
                           static_cast<std::uint64_t>(item);
          const Mlp src = sample_random_mlp(cfg.layout, derive_seed(spec.seed, "ae-mlp", idx), spec.sample);
          const Matrix xs = sample_inputs(derive_seed(spec.seed, "ae-x", idx), spec.inputs_per_mlp, src.input_dim);
          tape.clear();
          BoundModel bm(tape, model, true);
          const MinLossGraph g = min_loss_graph(bm, src, xs);
          tape.backward(g.objective);
          tape.for_each_slot_grad([&](int slot, const Matrix& gr) { out.grads[static_cast<std::size_t>(slot)] += gr; });
          out.loss_sum += g.result.loss;
          ++out.wins[static_cast<std::size_t>(g.result.decoder - 1)];
        }
      };
      if (threads == 1) {
        for (int s = 0; s < shards; ++s) run_shard(s);
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < std::min(threads, shards); ++w)
          pool.emplace_back([&, w] {
            for (int s = w; s < shards; s += threads) run_shard(s);
          });
        for (auto& t : pool) t.join();
      }

      std::vector<Matrix> grads = std::move(outs[0].grads);
      double loss_sum = outs[0].loss_sum;
      for (std::size_t k = 0; k < outs[0].wins.size(); ++k) epoch_wins[k] += outs[0].wins[k];
      for (int s = 1; s < shards; ++s) {
        auto& o = outs[static_cast<std::size_t>(s)];
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += o.grads[i];
        loss_sum += o.loss_sum;
        for (std::size_t k = 0; k < o.wins.size(); ++k) epoch_wins[k] += o.wins[k];
      }
      const double batch_loss = loss_sum / spec.batch_size;
      if (!std::isfinite(batch_loss)) {
        if (hooks.on_checkpoint) hooks.on_checkpoint(model, global_batch, "diverged");
        fail(ErrorKind::Diverged, "train: non-finite loss at batch " + std::to_string(global_batch));
      }
      double norm2 = 0.0;
      for (auto& g : grads) {
        g /= static_cast<double>(spec.batch_size);
        norm2 += g.squaredNorm();
      }
      const double norm = std::sqrt(norm2);
      if (spec.clip_norm > 0.0 && norm > spec.clip_norm)
        for (auto& g : grads) g *= spec.clip_norm / norm;
      adam.step(model.params(), grads, spec.lr);

      metrics.batch_losses.push_back(batch_loss);
      ema = std::isnan(ema) ? batch_loss : ema + ema_alpha * (batch_loss - ema);
      ema_min = std::min(ema_min, ema);
      if (ema > 2.0 * ema_min) ++metrics.divergence_warnings;
      epoch_loss += batch_loss;
      if (hooks.on_batch) hooks.on_batch(global_batch, batch_loss);
      if (spec.checkpoint_every > 0 && (global_batch + 1) % spec.checkpoint_every == 0 && hooks.on_checkpoint)
        hooks.on_checkpoint(model, global_batch, "periodic");
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = epoch_loss / spec.batches_per_epoch;
    const double items = static_cast<double>(spec.batches_per_epoch) * spec.batch_size;
    for (long w : epoch_wins) rec.per_decoder_win_rate.push_back(static_cast<double>(w) / items);
    metrics.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(model, global_batch, "final");
  return metrics;
}

TrainResult train_autoencoder(const AutoencoderConfig& config, const TrainSpec& spec, const TrainHooks& hooks) {
  TrainResult r{AutoencoderModel(config, derive_seed(spec.seed, "ae-model")), {}};
  r.metrics = train_autoencoder(r.model, spec, hooks);
  return r;
}

double heldout_loss(const AutoencoderModel& model, std::uint64_t seed, int count, int inputs_per_mlp,
                    const SampleOptions& sample) {
  require(count >= 1, ErrorKind::Config, "heldout_loss: count must be positive");
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const Mlp src = sample_random_mlp(model.config().layout, derive_seed(seed, "heldout-mlp", idx), sample);
    const Matrix xs = sample_inputs(derive_seed(seed, "heldout-x", idx), inputs_per_mlp, src.input_dim);
    total += min_loss(src, model, xs).loss;
  }
  return total / count;
}

namespace {
constexpr char kCkptMagic[9] = "SWNNCKPT";
constexpr std::uint32_t kCkptVersion = 1;
}  // namespace

void save_checkpoint(std::ostream& out, const AutoencoderModel& model) {
  std::ostringstream body(std::ios::binary);
  binio::put_magic(body, kCkptMagic);
  binio::put_u32(body, kCkptVersion);
  const bool f32 = model.config().precision == Precision::F32;
  binio::put_u32(body, f32 ? 1u : 0u);
  const std::string cfg = config_to_json(model.config()).dump();
  binio::put_u64(body, cfg.size());
  body.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  binio::put_u32(body, static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    binio::put_u32(body, static_cast<std::uint32_t>(p.name.size()));
    body.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    binio::put_u32(body, static_cast<std::uint32_t>(p.value.rows()));
    binio::put_u32(body, static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        if (f32)
          binio::put_f32(body, static_cast<float>(p.value(r, c)));
        else
          binio::put_f64(body, p.value(r, c));
      }
  }
  const std::string bytes = body.str();
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  binio::put_u32(out, static_cast<std::uint32_t>(crc));
  require(static_cast<bool>(out), ErrorKind::Io, "save_checkpoint: write failed");
}

AutoencoderModel load_checkpoint(std::istream& in) {
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(bytes.size() > 12, ErrorKind::Io, "load_checkpoint: file too short");
  std::istringstream tail(bytes.substr(bytes.size() - 4));
  const std::uint32_t stored = binio::get_u32(tail);
  bytes.resize(bytes.size() - 4);
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  require(static_cast<std::uint32_t>(crc) == stored, ErrorKind::Io, "load_checkpoint: checksum mismatch");

  std::istringstream body(bytes, std::ios::binary);
  binio::expect_magic(body, kCkptMagic, "checkpoint");
  const auto version = binio::get_u32(body);
  require(version == kCkptVersion, ErrorKind::Io, "load_checkpoint: unsupported version " + std::to_string(version));
  const bool f32 = binio::get_u32(body) == 1u;
  const auto cfg_len = binio::get_u64(body);
  std::string cfg_text(cfg_len, '\0');
  binio::read_exact(body, cfg_text.data(), cfg_text.size());
  AutoencoderConfig cfg = autoencoder_config_from_json(nlohmann::json::parse(cfg_text));
  AutoencoderModel model(cfg, 0);
  const auto count = binio::get_u32(body);
  require(count == model.params().size(), ErrorKind::Io, "load_checkpoint: tensor count does not match config");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = binio::get_u32(body);
    std::string name(name_len, '\0');
    binio::read_exact(body, name.data(), name.size());
    auto& p = model.params()[i];
    require(name == p.name, ErrorKind::Io, "load_checkpoint: unexpected tensor '" + name + "'");
    const auto rows = binio::get_u32(body);
    const auto cols = binio::get_u32(body);
    require(rows == p.value.rows() && cols == p.value.cols(), ErrorKind::Io, "load_checkpoint: shape mismatch for " + name);
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c)
        p.value(r, c) = f32 ? static_cast<double>(binio::get_f32(body)) : binio::get_f64(body);
  }
  return model;
}

void save_checkpoint(const std::string& path, const AutoencoderModel& model) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + path + " for writing");
  save_checkpoint(out, model);
}

AutoencoderModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace swatnn

#include "swatnn/latentopt.hpp"

#include "swatnn/error.hpp"
#include "swatnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace swatnn {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
}  // namespace

void PenaltyConfig::validate() const {
  require(finite_nonneg(lambda_s) && finite_nonneg(mu_1) && finite_nonneg(mu_c) && finite_nonneg(alpha) &&
              finite_nonneg(beta),
          ErrorKind::Config, "penalty coefficients must be finite and nonnegative");
  require(std::isfinite(t_s_init) && std::isfinite(t_n), ErrorKind::Config, "penalty thresholds must be finite");
  require(std::isfinite(soft_scale) && soft_scale > 0.0, ErrorKind::Config, "soft_scale must be positive");
}

PenaltyConfig penalty_preset(PenaltyLevel level) {
  PenaltyConfig p;
  switch (level) {
    case PenaltyLevel::None:
      break;
    case PenaltyLevel::Small:
      p.lambda_s = 1e-5;
      p.alpha = 0.1;
      p.beta = 1e-4;
      break;
    case PenaltyLevel::Medium:
      p.lambda_s = 1e-4;
      p.alpha = 0.4;
      p.beta = 1e-3;
      break;
    case PenaltyLevel::Large:
      p.lambda_s = 1e-3;
      p.alpha = 0.4;
      p.beta = 0.1;
      break;
  }
  return p;
}

PenaltyLevel penalty_level_from_name(const std::string& name) {
  if (name == "none") return PenaltyLevel::None;
  if (name == "small") return PenaltyLevel::Small;
  if (name == "medium") return PenaltyLevel::Medium;
  if (name == "large") return PenaltyLevel::Large;
  fail(ErrorKind::Config, "unknown penalty level '" + name + "'");
}

std::string penalty_level_name(PenaltyLevel level) {
  switch (level) {
    case PenaltyLevel::None: return "none";
    case PenaltyLevel::Small: return "small";
    case PenaltyLevel::Medium: return "medium";
    case PenaltyLevel::Large: return "large";
  }
  return "none";
}

void AnnealSchedule::validate() const {
  require(std::isfinite(t_init) && std::isfinite(t_final) && t_final > 0.0 && t_init >= t_final, ErrorKind::Config,
          "anneal schedule requires t_init >= t_final > 0");
  require(e_anneal > 0, ErrorKind::Config, "e_anneal must be positive");
}

double temperature(long epoch, const AnnealSchedule& sched) {
  require(epoch >= 0, ErrorKind::Config, "temperature: negative epoch");
  const double frac = static_cast<double>(epoch) / static_cast<double>(sched.e_anneal);
  return std::max(sched.t_final, sched.t_init * (1.0 - frac));
}

void SearchConfig::validate(int available) const {
  require(steps >= 0, ErrorKind::Config, "search steps must be nonnegative");
  require(std::isfinite(lr) && lr > 0.0, ErrorKind::Config, "search lr must be positive");
  require(selection_tolerance >= 0.0, ErrorKind::Config, "selection_tolerance must be nonnegative");
  require(divergence_threshold > 0.0, ErrorKind::Config, "divergence_threshold must be positive");
  require(threads >= 1, ErrorKind::Config, "threads must be >= 1");
  for (int k : decoder_set)
    require(k >= 1 && k <= available, ErrorKind::Config, "decoder index " + std::to_string(k) + " out of range");
  penalties.validate();
  anneal.validate();
}

std::vector<int> SearchConfig::decoders(int available) const {
  if (!decoder_set.empty()) return decoder_set;
  std::vector<int> all(static_cast<std::size_t>(available));
  for (int k = 1; k <= available; ++k) all[static_cast<std::size_t>(k - 1)] = k;
  return all;
}

double sparsity_penalty(const Vector& w, double t_s, const PenaltyConfig& cfg) {
  const double l1 = w.cwiseAbs().sum();
  double count = 0.0;
  if (cfg.aggregate_soft_count) {
    count = sigmoid(cfg.soft_scale * (w.cwiseAbs().array() - t_s).abs().sum());
  } else {
    for (Eigen::Index j = 0; j < w.size(); ++j) count += sigmoid(cfg.soft_scale * (t_s - std::abs(w(j))));
  }
  return cfg.mu_1 * l1 + cfg.mu_c * count;
}

Vector soft_weight_mask(const Vector& w, double t_s, double soft_scale, MaskMode mode) {
  Vector out(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double a = std::abs(w(j));
    out(j) = mode == MaskMode::Hard ? (a >= t_s ? w(j) : 0.0) : w(j) * sigmoid(soft_scale * (a - t_s));
  }
  return out;
}

double compactness_penalty(const std::vector<Vector>& masks, double alpha, double beta) {
  if (masks.empty()) return 0.0;
  double std_sum = 0.0, mean_sum = 0.0;
  for (const auto& m : masks) {
    require(m.size() > 0, ErrorKind::Shape, "compactness_penalty: empty layer");
    const double mu = m.mean();
    std_sum += std::sqrt((m.array() - mu).square().mean());
    mean_sum += mu;
  }
  const double l = static_cast<double>(masks.size());
  return -alpha * std_sum / l + beta * mean_sum / l;
}

ad::Var sparsity_penalty(const std::vector<ad::Var>& weights, ad::Var t_s, const PenaltyConfig& cfg) {
  require(!weights.empty(), ErrorKind::Shape, "sparsity_penalty: no weights");
  ad::Var l1, count;
  for (const auto& w : weights) {
    ad::Var a = ad::abs(w);
    ad::Var s1 = ad::sum(a);
    l1 = l1.valid() ? ad::add(l1, s1) : s1;
    ad::Var c = cfg.aggregate_soft_count ? ad::sum(ad::abs(ad::sub(a, t_s)))
                                         : ad::sum(ad::sigmoid(ad::scale(ad::sub(a, t_s), -cfg.soft_scale)));
    count = count.valid() ? ad::add(count, c) : c;
  }
  if (cfg.aggregate_soft_count) count = ad::sigmoid(ad::scale(count, cfg.soft_scale));
  return ad::add(ad::scale(l1, cfg.mu_1), ad::scale(count, cfg.mu_c));
}

ad::Var soft_weight_mask(ad::Var w, ad::Var t_s, double soft_scale) {
  return ad::mul(w, ad::sigmoid(ad::scale(ad::sub(ad::abs(w), t_s), soft_scale)));
}

ad::Var compactness_penalty(const std::vector<ad::Var>& masks, double alpha, double beta) {
  require(!masks.empty(), ErrorKind::Shape, "compactness_penalty: no layers");
  ad::Var std_sum, mean_sum;
  for (const auto& m : masks) {
    ad::Var mu = ad::mean(m);
    ad::Var sd = ad::sqrt(ad::mean(ad::square(ad::sub(m, mu))));
    std_sum = std_sum.valid() ? ad::add(std_sum, sd) : sd;
    mean_sum = mean_sum.valid() ? ad::add(mean_sum, mu) : mu;
  }
  const double l = static_cast<double>(masks.size());
  return ad::add(ad::scale(std_sum, -alpha / l), ad::scale(mean_sum, beta / l));
}

SearchLoss search_loss_graph(const BoundModel& model, int decoder, ad::Var z, ad::Var t_s, const Matrix& xs,
                             const Matrix& ys, long epoch, const SearchConfig& cfg) {
  const auto& layout = model.model().config().layout;
  require(xs.rows() == ys.rows() && xs.rows() > 0, ErrorKind::Shape, "search_loss: inputs and targets disagree");
  ad::Tape& tape = model.tape();
  MlpVars net = unpack_vars(decode(model, decoder, z), layout, decoder, static_cast<int>(xs.cols()),
                            static_cast<int>(ys.cols()));

  std::vector<ad::Var> raw_weights, masks;
  const double scale = cfg.penalties.soft_scale;
  for (auto& l : net.layers) {
    raw_weights.push_back(l.weights);
    masks.push_back(l.neuron_mask);
    l.weights = soft_weight_mask(l.weights, t_s, scale);
  }
  raw_weights.push_back(net.output_weights);
  net.output_weights = soft_weight_mask(net.output_weights, t_s, scale);

  EvalConfig ec;
  ec.temperature = temperature(epoch, cfg.anneal);
  ec.mask_mode = MaskMode::Soft;
  ec.mask_sharpness = scale;
  ec.neuron_threshold = cfg.penalties.t_n;
  ad::Var pred = eval_mlp(net, tape.constant(xs), ec);

  SearchLoss out;
  out.data = ad::mean(ad::square(ad::sub(pred, tape.constant(ys))));
  out.sparsity = sparsity_penalty(raw_weights, t_s, cfg.penalties);
  out.compactness = compactness_penalty(masks, cfg.penalties.alpha, cfg.penalties.beta);
  out.total = ad::add(ad::add(out.data, ad::scale(out.sparsity, cfg.penalties.lambda_s)), out.compactness);
  return out;
}

double search_loss(const AutoencoderModel& model, int decoder, const Embedding& z, double t_s, const Matrix& xs,
                   const Matrix& ys, long epoch, const SearchConfig& cfg) {
  ad::Tape tape;
  BoundModel bound(tape, model, false);
  return search_loss_graph(bound, decoder, tape.constant(z), tape.constant_scalar(t_s), xs, ys, epoch, cfg)
      .total.scalar();
}

Mlp harden(const MatRep& decoded, const RepLayout& layout, int decoder, double t_s, double t_n) {
  Mlp m = unpack(decoded, layout, decoder, true, t_n);
  auto mask = [&](Matrix& w) {
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        if (!(std::abs(w(r, c)) >= t_s)) w(r, c) = 0.0;
  };
  for (auto& l : m.layers) mask(l.weights);
  mask(m.output_weights);
  return prune_inactive(m, t_n);
}

int nonzero_weights(const Mlp& mlp) {
  int n = 0;
  for (const auto& l : mlp.layers) n += static_cast<int>((l.weights.array() != 0.0).count());
  n += static_cast<int>((mlp.output_weights.array() != 0.0).count());
  return n;
}

std::vector<int> active_neurons(const Mlp& mlp) {
  std::vector<int> out;
  for (const auto& l : mlp.layers) out.push_back(static_cast<int>((l.neuron_mask.array() >= 0.5).count()));
  return out;
}

double mse(const Mlp& mlp, const Matrix& xs, const Matrix& ys) {
  EvalConfig ec;
  ec.mask_mode = MaskMode::Hard;
  const Matrix pred = eval_mlp(mlp, xs, ec);
  require(pred.rows() == ys.rows() && pred.cols() == ys.cols(), ErrorKind::Shape, "mse: target shape mismatch");
  return (pred - ys).array().square().mean();
}

namespace {

struct ParamAdam {
  Matrix m, v;
  long t = 0;
  void step(Matrix& p, const Matrix& g, double lr) {
    if (m.size() == 0) {
      m = Matrix::Zero(p.rows(), p.cols());
      v = Matrix::Zero(p.rows(), p.cols());
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.cwiseProduct(g);
    const double c1 = 1 - std::pow(b1, static_cast<double>(t)), c2 = 1 - std::pow(b2, static_cast<double>(t));
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

DecoderResult search_decoder(const AutoencoderModel& model, const TaskDataset& data, const SearchConfig& cfg,
                             int decoder) {
  const auto& mc = model.config();
  cfg.validate(mc.decoders());
  require(decoder >= 1 && decoder <= mc.decoders(), ErrorKind::Config, "search: decoder out of range");
  require(data.input_dim() <= mc.layout.input_dim_max && data.output_dim() <= mc.layout.output_dim_max,
          ErrorKind::Layout, "search: dataset dimensions exceed the layout");

  DecoderResult r;
  r.decoder = decoder;
  Rng rng(cfg.seed ^ static_cast<std::uint64_t>(decoder));
  Matrix z(mc.tokens(), mc.d_model);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
  Matrix ts = Matrix::Constant(1, 1, cfg.penalties.t_s_init);
  Matrix last_z = z, last_ts = ts;
  ParamAdam adam_z, adam_t;

  for (int step = 0; step < cfg.steps; ++step) {
    ad::Tape tape;
    BoundModel bound(tape, model, false);
    ad::Var zv = tape.variable(z);
    ad::Var tv = tape.variable(ts);
    SearchLoss loss = search_loss_graph(bound, decoder, zv, tv, data.x_train, data.y_train, step, cfg);
    const double value = loss.total.scalar();
    if (!std::isfinite(value) || value > cfg.divergence_threshold) {
      r.diverged = true;
      break;
    }
    r.trajectory.push_back(value);
    tape.backward(loss.total);
    const Matrix gz = tape.grad(zv);
    const Matrix gt = tape.grad(tv);
    if (!gz.allFinite() || !gt.allFinite()) {
      r.diverged = true;
      break;
    }
    last_z = z;
    last_ts = ts;
    if (cfg.optimizer == SearchOptimizer::Adam) {
      adam_z.step(z, gz, cfg.lr);
      adam_t.step(ts, gt, cfg.lr);
    } else {
      z -= cfg.lr * gz;
      ts -= cfg.lr * gt;
    }
    ts(0, 0) = std::clamp(ts(0, 0), 0.0, 1.0);
    ++r.steps_run;
  }
  // A diverged run reports the last parameters that produced a finite loss.
  if (r.diverged) {
    z = last_z;
    ts = last_ts;
  }
  r.z = z;
  r.t_s = ts(0, 0);
  const MatRep decoded = swatnn::decode(model, decoder, z, data.input_dim(), data.output_dim());
  r.mlp = harden(decoded, mc.layout, decoder, r.t_s, cfg.penalties.t_n);
  r.train_mse = mse(r.mlp, data.x_train, data.y_train);
  r.test_mse = mse(r.mlp, data.x_test, data.y_test);
  r.nonzeros = nonzero_weights(r.mlp);
  r.active_neurons = active_neurons(r.mlp);
  return r;
}

SearchResult run_search(const AutoencoderModel& model, const TaskDataset& data, const SearchConfig& cfg) {
  cfg.validate(model.config().decoders());
  const std::vector<int> ks = cfg.decoders(model.config().decoders());
  SearchResult out;
  out.per_decoder.resize(ks.size());
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), ks.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < ks.size(); ++i) out.per_decoder[i] = search_decoder(model, data, cfg, ks[i]);
  } else {
    std::vector<std::exception_ptr> errors(ks.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < ks.size(); i += workers) {
          try {
            out.per_decoder[i] = search_decoder(model, data, cfg, ks[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  bool any = false;
  for (const auto& r : out.per_decoder) any = any || !r.diverged;
  if (any) out.selected = select_best(out.per_decoder, cfg.selection_tolerance);
  return out;
}

int select_best(const std::vector<Candidate>& candidates, double tolerance) {
  require(tolerance >= 0.0, ErrorKind::Config, "select_best: negative tolerance");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates)
    if (!c.diverged && std::isfinite(c.mse)) best = std::min(best, c.mse);
  require(std::isfinite(best), ErrorKind::NoResult, "select_best: no finite result");
  // The relative slack keeps boundary cases such as exactly 1.05x inside the band
  // regardless of rounding in the product.
  const double limit = best * (1.0 + tolerance) * (1.0 + 1e-12);
  int chosen = -1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.diverged || !std::isfinite(c.mse) || c.mse > limit) continue;
    if (chosen < 0) {
      chosen = static_cast<int>(i);
      continue;
    }
    const auto& b = candidates[static_cast<std::size_t>(chosen)];
    if (c.nonzeros < b.nonzeros || (c.nonzeros == b.nonzeros && c.mse < b.mse)) chosen = static_cast<int>(i);
  }
  return chosen;
}

int select_best(const std::vector<DecoderResult>& results, double tolerance) {
  std::vector<Candidate> c;
  c.reserve(results.size());
  for (const auto& r : results) c.push_back({r.test_mse, r.nonzeros, r.diverged});
  return select_best(c, tolerance);
}

}  // namespace swatnn

#include "swatnn/baselines.hpp"

#include "swatnn/error.hpp"
#include "swatnn/latentopt.hpp"
#include "swatnn/rng.hpp"

#include <cmath>
#include <sstream>

namespace swatnn {

Architecture parse_architecture(const std::string& text) {
  std::stringstream ss(text);
  std::string d, w, a;
  require(std::getline(ss, d, ',') && std::getline(ss, w, ',') && std::getline(ss, a) && !a.empty(),
          ErrorKind::Config, "architecture must look like depth,width,activation");
  Architecture arch;
  try {
    std::size_t pos = 0;
    arch.depth = std::stoi(d, &pos);
    require(pos == d.size(), ErrorKind::Config, "bad depth");
    arch.width = std::stoi(w, &pos);
    require(pos == w.size(), ErrorKind::Config, "bad width");
  } catch (const std::logic_error&) {
    fail(ErrorKind::Config, "architecture '" + text + "': depth and width must be integers");
  }
  arch.activation = activation_from_name(a);
  require(arch.depth >= 1 && arch.width >= 1, ErrorKind::Config, "architecture depth and width must be positive");
  return arch;
}

std::string format_architecture(const Architecture& arch) {
  return std::to_string(arch.depth) + "," + std::to_string(arch.width) + "," +
         std::string(activation_name(arch.activation));
}

void TraditionalConfig::validate() const {
  require(epochs >= 0, ErrorKind::Config, "epochs must be nonnegative");
  require(std::isfinite(lr) && lr > 0.0, ErrorKind::Config, "lr must be positive");
  require(init_range >= 0.0, ErrorKind::Config, "init_range must be nonnegative");
}

void AdmmConfig::validate() const {
  require(std::isfinite(rho) && rho > 0.0, ErrorKind::Config, "rho must be positive");
  require(std::isfinite(threshold) && threshold >= 0.0, ErrorKind::Config, "threshold must be nonnegative");
  require(outer_iters >= 0 && inner_steps >= 0 && finetune_steps >= 0, ErrorKind::Config,
          "iteration counts must be nonnegative");
  require(std::isfinite(inner_lr) && inner_lr > 0.0, ErrorKind::Config, "inner_lr must be positive");
}

Mlp init_traditional(const Architecture& arch, int input_dim, int output_dim, std::uint64_t seed, double init_range) {
  Rng rng(seed, "traditional-init");
  Mlp m;
  m.input_dim = input_dim;
  m.output_dim = output_dim;
  int fan_in = input_dim;
  for (int j = 0; j < arch.depth; ++j) {
    Matrix w(fan_in, arch.width);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-init_range, init_range);
    m.layers.push_back(make_hard_layer(std::move(w), Vector::Zero(arch.width),
                                       std::vector<ActivationKind>(static_cast<std::size_t>(arch.width), arch.activation)));
    fan_in = arch.width;
  }
  m.output_weights.resize(fan_in, output_dim);
  for (Eigen::Index c = 0; c < m.output_weights.cols(); ++c)
    for (Eigen::Index r = 0; r < m.output_weights.rows(); ++r) m.output_weights(r, c) = rng.uniform(-init_range, init_range);
  m.output_biases = Vector::Zero(output_dim);
  return m;
}

namespace {

// Weight matrices of a network in a fixed order: hidden layers, then output.
std::vector<Matrix*> weight_refs(Mlp& m) {
  std::vector<Matrix*> out;
  for (auto& l : m.layers) out.push_back(&l.weights);
  out.push_back(&m.output_weights);
  return out;
}

struct Anchor {
  std::vector<Matrix> target;  // Z - U
  double rho = 0.0;
};

// One full-batch gradient step on MSE (+ optional proximal term). Returns the MSE
// before the step. `masks` (if given) freezes entries that are zero in the mask.
double gradient_step(Mlp& m, const TaskDataset& data, double lr, const Anchor* anchor,
                     const std::vector<Matrix>* masks) {
  ad::Tape tape;
  MlpVars v = bind_mlp(tape, m, true);
  EvalConfig ec;
  ec.mask_mode = MaskMode::Hard;
  ad::Var pred = eval_mlp(v, tape.constant(data.x_train), ec);
  ad::Var err = ad::mean(ad::square(ad::sub(pred, tape.constant(data.y_train))));
  ad::Var total = err;
  std::vector<ad::Var> wv;
  for (auto& l : v.layers) wv.push_back(l.weights);
  wv.push_back(v.output_weights);
  if (anchor != nullptr) {
    for (std::size_t i = 0; i < wv.size(); ++i) {
      ad::Var d = ad::sub(wv[i], tape.constant(anchor->target[i]));
      total = ad::add(total, ad::scale(ad::sum(ad::square(d)), 0.5 * anchor->rho));
    }
  }
  const double value = err.scalar();
  if (!std::isfinite(total.scalar())) return value;
  tape.backward(total);
  auto refs = weight_refs(m);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    Matrix g = tape.grad(wv[i]);
    if (masks != nullptr) g = g.cwiseProduct((*masks)[i]);
    *refs[i] -= lr * g;
  }
  for (std::size_t j = 0; j < m.layers.size(); ++j)
    m.layers[j].biases -= lr * tape.grad(v.layers[j].biases).transpose();
  m.output_biases -= lr * tape.grad(v.output_biases).transpose();
  return value;
}

void finish(BaselineResult& r, const TaskDataset& data) {
  r.train_mse = mse(r.mlp, data.x_train, data.y_train);
  r.test_mse = mse(r.mlp, data.x_test, data.y_test);
  r.nonzeros = nonzero_weights(r.mlp);
  r.active_neurons = active_neurons(r.mlp);
}

bool bad(double v, double limit) { return !std::isfinite(v) || v > limit; }

}  // namespace

BaselineResult train_traditional(const Architecture& arch, const TaskDataset& data, const TraditionalConfig& cfg,
                                 const RepLayout& layout) {
  cfg.validate();
  require(arch.depth >= 1 && arch.depth <= layout.max_hidden_layers && arch.width >= 1 &&
              arch.width <= layout.max_neurons,
          ErrorKind::Layout, "architecture " + format_architecture(arch) + " exceeds the layout");
  BaselineResult r;
  r.mlp = init_traditional(arch, data.input_dim(), data.output_dim(), cfg.seed, cfg.init_range);
  for (int e = 0; e < cfg.epochs; ++e) {
    Mlp before = r.mlp;
    const double loss = gradient_step(r.mlp, data, cfg.lr, nullptr, nullptr);
    if (bad(loss, cfg.divergence_threshold) || !std::isfinite(r.mlp.output_biases.sum())) {
      r.mlp = std::move(before);
      r.diverged = true;
      break;
    }
    r.trajectory.push_back(loss);
  }
  finish(r, data);
  return r;
}

Vector admm_project(const Vector& w, double threshold) {
  return w.unaryExpr([threshold](double v) { return std::abs(v) < threshold ? 0.0 : v; });
}

Matrix admm_project(const Matrix& w, double threshold) {
  return w.unaryExpr([threshold](double v) { return std::abs(v) < threshold ? 0.0 : v; });
}

BaselineResult admm_prune(const Mlp& mlp, const TaskDataset& data, const AdmmConfig& cfg) {
  cfg.validate();
  mlp.validate();
  BaselineResult r;
  r.mlp = mlp;
  r.train_mse_before = mse(mlp, data.x_train, data.y_train);
  r.test_mse_before = mse(mlp, data.x_test, data.y_test);
  r.nonzeros_before = nonzero_weights(mlp);

  auto refs = weight_refs(r.mlp);
  std::vector<Matrix> alive, z, u;
  for (Matrix* w : refs) {
    alive.push_back((w->array() != 0.0).cast<double>().matrix());
    z.push_back(admm_project(*w, cfg.threshold).cwiseProduct(alive.back()));
    u.push_back(Matrix::Zero(w->rows(), w->cols()));
  }

  Anchor anchor;
  anchor.rho = cfg.rho;
  for (int outer = 0; outer < cfg.outer_iters && !r.diverged; ++outer) {
    anchor.target.clear();
    for (std::size_t i = 0; i < refs.size(); ++i) anchor.target.push_back(z[i] - u[i]);
    for (int s = 0; s < cfg.inner_steps; ++s) {
      const double loss = gradient_step(r.mlp, data, cfg.inner_lr, &anchor, &alive);
      if (bad(loss, cfg.divergence_threshold)) {
        r.diverged = true;
        break;
      }
      r.trajectory.push_back(loss);
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
      z[i] = admm_project(Matrix(*refs[i] + u[i]), cfg.threshold).cwiseProduct(alive[i]);
      u[i] += *refs[i] - z[i];
    }
  }

  std::vector<Matrix> keep;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    keep.push_back((z[i].array() != 0.0).cast<double>().matrix());
    *refs[i] = refs[i]->cwiseProduct(keep[i]);
  }
  for (int s = 0; s < cfg.finetune_steps && !r.diverged; ++s) {
    const double loss = gradient_step(r.mlp, data, cfg.inner_lr, nullptr, &keep);
    if (bad(loss, cfg.divergence_threshold)) {
      r.diverged = true;
      break;
    }
    r.trajectory.push_back(loss);
  }
  // Pruned positions are exactly zero regardless of how the loop ended.
  for (std::size_t i = 0; i < refs.size(); ++i) *refs[i] = refs[i]->cwiseProduct(keep[i]);
  finish(r, data);
  return r;
}

}  // namespace swatnn

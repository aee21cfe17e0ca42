#include "swatnn/analysis.hpp"

#include "swatnn/error.hpp"
#include "swatnn/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

namespace swatnn {

namespace {

void fix_sign(Vector& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v(idx) < 0) v = -v;
}

// Power iteration for the top eigenvector of X^T X / (n - 1), restricted to the
// complement of `against` (if non-empty).
Vector power_iterate(const Matrix& x, const Vector& against, double shift, int iterations, double tol, Rng& rng,
                     double& lambda) {
  const Eigen::Index d = x.cols();
  const double denom = static_cast<double>(std::max<Eigen::Index>(x.rows() - 1, 1));
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
  auto project = [&](Vector& u) {
    if (against.size() > 0) u -= against.dot(u) * against;
  };
  project(v);
  v.normalize();
  lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = x.transpose() * (x * v) / denom;
    if (against.size() > 0) w -= shift * against.dot(v) * against;
    project(w);
    const double norm = w.norm();
    if (norm == 0.0) {
      lambda = 0.0;
      return Vector();
    }
    w /= norm;
    if (w.dot(v) < 0) w = -w;
    const double change = (w - v).norm();
    v = std::move(w);
    lambda = norm;
    if (change < tol) break;
  }
  project(v);
  v.normalize();
  lambda = v.dot(x.transpose() * (x * v)) / denom;
  return v;
}

}  // namespace

PcaResult pca_top2(const Matrix& samples, int iterations, double tol) {
  require(samples.rows() >= 2, ErrorKind::Shape, "pca_top2: need at least two samples");
  require(samples.cols() >= 2, ErrorKind::Shape, "pca_top2: need at least two dimensions");
  const Matrix x = samples.rowwise() - samples.colwise().mean();
  Rng rng(0x9e3779b97f4a7c15ULL, "pca");
  PcaResult r;
  r.v1 = power_iterate(x, Vector(), 0.0, iterations, tol, rng, r.lambda1);
  require(r.v1.size() > 0, ErrorKind::Shape, "pca_top2: samples have zero variance");
  fix_sign(r.v1);
  r.v2 = power_iterate(x, r.v1, r.lambda1, iterations, tol, rng, r.lambda2);
  if (r.v2.size() == 0 || r.lambda2 <= 1e-12 * std::max(r.lambda1, 1e-300)) {
    r.rank_deficient = true;
    // Standard basis vector least aligned with v1, orthogonalized.
    Eigen::Index idx = 0;
    r.v1.cwiseAbs().minCoeff(&idx);
    Vector e = Vector::Unit(r.v1.size(), idx);
    e -= r.v1.dot(e) * r.v1;
    r.v2 = e.normalized();
    r.lambda2 = 0.0;
  }
  // One more orthogonalization keeps v1 . v2 at rounding level.
  r.v2 -= r.v1.dot(r.v2) * r.v1;
  r.v2.normalize();
  fix_sign(r.v2);
  return r;
}

void SmoothnessConfig::validate() const {
  require(n_neighbors >= 2, ErrorKind::Config, "n_neighbors must be at least 2");
  require(noise_std > 0.0 && grid_step > 0.0 && grid_range > 0.0, ErrorKind::Config,
          "noise_std, grid_step and grid_range must be positive");
  require(n_inputs >= 1 && input_dim >= 1 && output_dim >= 1 && threads >= 1, ErrorKind::Config,
          "smoothness sizes must be positive");
}

Embedding offset_embedding(const Embedding& z, const Vector& v1, double a, const Vector& v2, double b) {
  require(v1.size() == z.size() && v2.size() == z.size(), ErrorKind::Shape, "offset_embedding: size mismatch");
  Embedding out = z;
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      const Eigen::Index i = r * z.cols() + c;
      out(r, c) = z(r, c) + a * v1(i) + b * v2(i);
    }
  return out;
}

SmoothnessGrid smoothness_probe(const AutoencoderModel& model, int decoder, const SmoothnessConfig& cfg) {
  cfg.validate();
  const auto& mc = model.config();
  require(decoder >= 1 && decoder <= mc.decoders(), ErrorKind::Config, "smoothness_probe: decoder out of range");
  SmoothnessGrid g;
  Rng rng(cfg.seed, "probe-z");
  g.base.resize(mc.tokens(), mc.d_model);
  for (Eigen::Index r = 0; r < g.base.rows(); ++r)
    for (Eigen::Index c = 0; c < g.base.cols(); ++c) g.base(r, c) = rng.normal();

  Rng noise(cfg.seed, "probe-neighbors");
  Matrix neighbors(cfg.n_neighbors, g.base.size());
  for (int i = 0; i < cfg.n_neighbors; ++i)
    for (Eigen::Index r = 0; r < g.base.rows(); ++r)
      for (Eigen::Index c = 0; c < g.base.cols(); ++c)
        neighbors(i, r * g.base.cols() + c) = g.base(r, c) + noise.normal(0.0, cfg.noise_std);
  const PcaResult pca = pca_top2(neighbors);
  g.v1 = pca.v1;
  g.v2 = pca.v2;
  g.rank_deficient = pca.rank_deficient;

  const int steps = static_cast<int>(std::llround(2.0 * cfg.grid_range / cfg.grid_step));
  for (int i = 0; i <= steps; ++i) g.alphas.push_back(-cfg.grid_range + i * cfg.grid_step);
  g.betas = g.alphas;

  const Matrix xs = sample_inputs(derive_seed(cfg.seed, "probe-x"), cfg.n_inputs, cfg.input_dim);
  auto evaluate = [&](const Embedding& z) {
    const MatRep rep = decode(model, decoder, z, cfg.input_dim, cfg.output_dim);
    return eval_mlp(unpack(rep, mc.layout, decoder, false), xs, decoded_eval_config());
  };
  const Matrix reference = evaluate(g.base);

  const auto na = static_cast<Eigen::Index>(g.alphas.size());
  const auto nb = static_cast<Eigen::Index>(g.betas.size());
  g.mse.resize(na, nb);
  auto cell = [&](Eigen::Index k) {
    const Eigen::Index i = k / nb, j = k % nb;
    const Matrix y = evaluate(offset_embedding(g.base, g.v1, g.alphas[i], g.v2, g.betas[j]));
    g.mse(i, j) = (y - reference).array().square().mean();
  };
  const Eigen::Index total = na * nb;
  const int workers = std::min<int>(cfg.threads, static_cast<int>(total));
  if (workers <= 1) {
    for (Eigen::Index k = 0; k < total; ++k) cell(k);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (Eigen::Index k = w; k < total; k += workers) cell(k);
      });
    for (auto& t : pool) t.join();
  }
  return g;
}

std::vector<ParetoPoint> pareto_extract(const std::vector<ParetoPoint>& points) {
  require(!points.empty(), ErrorKind::Shape, "pareto_extract: no points");
  std::vector<ParetoPoint> sorted = points;
  std::stable_sort(sorted.begin(), sorted.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    return a.nonzeros != b.nonzeros ? a.nonzeros < b.nonzeros : a.mse < b.mse;
  });
  std::vector<ParetoPoint> front;
  double best_prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].nonzeros == sorted[i].nonzeros) ++j;
    const double group_min = sorted[i].mse;
    if (group_min < best_prev)
      for (std::size_t k = i; k < j && sorted[k].mse == group_min; ++k) front.push_back(sorted[k]);
    best_prev = std::min(best_prev, group_min);
    i = j;
  }
  return front;
}

std::pair<Mlp, Mlp> split_mlp(const Mlp& deep, int cut) {
  deep.validate();
  require(cut >= 1 && cut < deep.depth(), ErrorKind::Config,
          "split_mlp: cut " + std::to_string(cut) + " outside 1.." + std::to_string(deep.depth() - 1));
  const int w = deep.layers[static_cast<std::size_t>(cut - 1)].width();
  Mlp front, back;
  front.input_dim = deep.input_dim;
  front.output_dim = w;
  front.layers.assign(deep.layers.begin(), deep.layers.begin() + cut);
  front.output_weights = Matrix::Identity(w, w);
  front.output_biases = Vector::Zero(w);
  back.input_dim = w;
  back.output_dim = deep.output_dim;
  back.layers.assign(deep.layers.begin() + cut, deep.layers.end());
  back.output_weights = deep.output_weights;
  back.output_biases = deep.output_biases;
  return {front, back};
}

Mlp compose_mlps(const Mlp& front, const Mlp& back) {
  require(front.output_dim == back.input_dim, ErrorKind::Shape, "compose_mlps: interface dimensions differ");
  Mlp out;
  out.input_dim = front.input_dim;
  out.output_dim = back.output_dim;
  out.layers = front.layers;
  if (back.layers.empty()) {
    out.output_weights = front.output_weights * back.output_weights;
    out.output_biases = (front.output_biases.transpose() * back.output_weights).transpose() + back.output_biases;
    return out;
  }
  HiddenLayer first = back.layers.front();
  first.biases = (front.output_biases.transpose() * first.weights).transpose() + first.biases;
  first.weights = front.output_weights * first.weights;
  out.layers.push_back(std::move(first));
  out.layers.insert(out.layers.end(), back.layers.begin() + 1, back.layers.end());
  out.output_weights = back.output_weights;
  out.output_biases = back.output_biases;
  return out;
}

Mlp sample_deep_mlp(std::uint64_t seed, int depth, std::pair<int, int> width_range, int input_dim, int output_dim,
                    double weight_bound, double bias_bound) {
  require(depth >= 1 && width_range.first >= 1 && width_range.first <= width_range.second && input_dim >= 1 &&
              output_dim >= 1,
          ErrorKind::Config, "sample_deep_mlp: invalid sizes");
  Rng rng(seed, "deep-mlp");
  Mlp m;
  m.input_dim = input_dim;
  m.output_dim = output_dim;
  int fan_in = input_dim;
  for (int j = 0; j < depth; ++j) {
    const int w = rng.uniform_int(width_range.first, width_range.second);
    Matrix weights(fan_in, w);
    for (Eigen::Index c = 0; c < w; ++c)
      for (Eigen::Index r = 0; r < fan_in; ++r) weights(r, c) = rng.uniform(-weight_bound, weight_bound);
    Vector biases(w);
    for (Eigen::Index h = 0; h < w; ++h) biases(h) = rng.uniform(-bias_bound, bias_bound);
    std::vector<ActivationKind> acts(static_cast<std::size_t>(w));
    for (auto& a : acts) a = static_cast<ActivationKind>(rng.uniform_int(0, kNumActivations - 1));
    m.layers.push_back(make_hard_layer(std::move(weights), std::move(biases), acts));
    fan_in = w;
  }
  m.output_weights.resize(fan_in, output_dim);
  for (Eigen::Index c = 0; c < output_dim; ++c)
    for (Eigen::Index r = 0; r < fan_in; ++r) m.output_weights(r, c) = rng.uniform(-weight_bound, weight_bound);
  m.output_biases.resize(output_dim);
  for (Eigen::Index c = 0; c < output_dim; ++c) m.output_biases(c) = rng.uniform(-bias_bound, bias_bound);
  return m;
}

void CompressConfig::validate() const {
  for (std::size_t i = 0; i < cuts.size(); ++i)
    require(cuts[i] >= 1 && (i == 0 || cuts[i] > cuts[i - 1]), ErrorKind::Config,
            "compress: cuts must be positive and strictly increasing");
  require(target_depths.size() == cuts.size() + 1, ErrorKind::Config,
          "compress: need one target depth per part (cuts + 1)");
  require(train_inputs >= 1 && test_inputs >= 1, ErrorKind::Config, "compress: input counts must be positive");
}

namespace {

EvalConfig hard_eval() {
  EvalConfig ec;
  ec.mask_mode = MaskMode::Hard;
  return ec;
}

std::vector<Mlp> split_parts(const Mlp& deep, const std::vector<int>& cuts) {
  std::vector<Mlp> parts;
  Mlp rest = deep;
  int consumed = 0;
  for (int c : cuts) {
    require(c < deep.depth(), ErrorKind::Config, "compress: cut beyond network depth");
    auto [front, back] = split_mlp(rest, c - consumed);
    parts.push_back(std::move(front));
    rest = std::move(back);
    consumed = c;
  }
  parts.push_back(std::move(rest));
  return parts;
}

// Affine input map to [-1, 1] per column and an output scale, folded into the
// network after search.
struct PartScaling {
  Vector lo, hi;
  double out_scale = 1.0;
};

Matrix scale_inputs(const Matrix& x, const PartScaling& s) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = 2.0 * (x.col(j).array() - s.lo(j)) / (s.hi(j) - s.lo(j)) - 1.0;
  return out;
}

Mlp unscale(Mlp m, const PartScaling& s) {
  const Vector mul = 2.0 / (s.hi - s.lo).array();
  const Vector add = (-2.0 * s.lo.array() / (s.hi - s.lo).array() - 1.0).matrix();
  if (!m.layers.empty()) {
    auto& first = m.layers.front();
    first.biases += (add.transpose() * first.weights).transpose();
    first.weights = mul.asDiagonal() * first.weights;
  } else {
    m.output_biases += (add.transpose() * m.output_weights).transpose();
    m.output_weights = mul.asDiagonal() * m.output_weights;
  }
  m.output_weights *= s.out_scale;
  m.output_biases *= s.out_scale;
  return m;
}

}  // namespace

CompressReport compress(const Mlp& deep, const AutoencoderModel& model, const CompressConfig& cfg) {
  cfg.validate();
  deep.validate();
  const auto& layout = model.config().layout;
  const std::vector<Mlp> parts = split_parts(deep, cfg.cuts);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    require(parts[p].input_dim <= layout.input_dim_max && parts[p].output_dim <= layout.output_dim_max, ErrorKind::Layout,
            "compress: part " + std::to_string(p + 1) + " has dims " + std::to_string(parts[p].input_dim) + "->" +
                std::to_string(parts[p].output_dim) + " exceeding the layout");
    require(cfg.target_depths[p] >= 1 && cfg.target_depths[p] <= layout.max_hidden_layers, ErrorKind::Layout,
            "compress: target depth outside the autoencoder's decoders");
  }

  const Matrix x_train = sample_inputs(derive_seed(cfg.seed, "compress-train"), cfg.train_inputs, deep.input_dim);
  const Matrix x_test = sample_inputs(derive_seed(cfg.seed, "compress-test"), cfg.test_inputs, deep.input_dim);

  CompressReport rep;
  rep.original_depth = deep.depth();
  rep.original_nonzeros = nonzero_weights(deep);
  Matrix in_train = x_train, in_test = x_test;
  Mlp composed;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Matrix out_train = eval_mlp(parts[p], in_train, hard_eval());
    const Matrix out_test = eval_mlp(parts[p], in_test, hard_eval());

    PartScaling s;
    s.lo = in_train.colwise().minCoeff().transpose();
    s.hi = in_train.colwise().maxCoeff().transpose();
    for (Eigen::Index j = 0; j < s.lo.size(); ++j)
      if (!(s.hi(j) - s.lo(j) > 1e-9)) {
        s.lo(j) -= 1.0;
        s.hi(j) += 1.0;
      }
    s.out_scale = out_train.cwiseAbs().maxCoeff() + kOutputMargin;

    TaskDataset ds = make_dataset("part" + std::to_string(p + 1), scale_inputs(in_train, s), out_train / s.out_scale,
                                  scale_inputs(in_test, s), out_test / s.out_scale);
    SearchConfig sc = cfg.search;
    sc.decoder_set = {cfg.target_depths[p]};
    sc.seed = derive_seed(cfg.search.seed, "compress-part", p);
    DecoderResult dr = search_decoder(model, ds, sc, cfg.target_depths[p]);

    PartReport pr;
    pr.index = static_cast<int>(p + 1);
    pr.original_depth = parts[p].depth();
    pr.target_depth = cfg.target_depths[p];
    pr.input_dim = parts[p].input_dim;
    pr.output_dim = parts[p].output_dim;
    pr.search_train_mse = dr.train_mse;
    pr.search_test_mse = dr.test_mse;
    pr.trajectory = std::move(dr.trajectory);
    pr.compressed = unscale(dr.mlp, s);
    pr.nonzeros = nonzero_weights(pr.compressed);
    pr.teacher_mse = (eval_mlp(pr.compressed, in_test, hard_eval()) - out_test).array().square().mean();

    composed = p == 0 ? pr.compressed : compose_mlps(composed, pr.compressed);
    if (p + 1 < parts.size()) {
      const Matrix approx = eval_mlp(composed, x_test, hard_eval());
      rep.interface_mse.push_back((approx - out_test).array().square().mean());
    }
    rep.parts.push_back(std::move(pr));
    in_train = out_train;
    in_test = out_test;
  }

  const Matrix teacher = eval_mlp(deep, x_test, hard_eval());
  const Matrix student = eval_mlp(composed, x_test, hard_eval());
  rep.output_mse = (student - teacher).array().square().mean();
  const double var = (teacher.rowwise() - teacher.colwise().mean()).array().square().mean();
  rep.relative_output_mse = rep.output_mse / std::max(var, 1e-12);
  rep.compressed = std::move(composed);
  rep.compressed_depth = rep.compressed.depth();
  rep.compressed_nonzeros = nonzero_weights(rep.compressed);
  return rep;
}

void write_report(const std::vector<std::string>& result_files, const std::string& out_dir) {
  require(!result_files.empty(), ErrorKind::Config, "report: no result files");
  std::filesystem::create_directories(out_dir);
  std::ofstream summary(std::filesystem::path(out_dir) / "summary.csv");
  std::ofstream best(std::filesystem::path(out_dir) / "best.csv");
  std::ofstream pareto(std::filesystem::path(out_dir) / "pareto.csv");
  require(summary && best && pareto, ErrorKind::Io, "report: cannot write CSV files in " + out_dir);
  summary.precision(17);
  best.precision(17);
  pareto.precision(17);
  summary << "file,task,method,run,label,train_mse,test_mse,nonzeros,diverged,selected\n";
  best << "task,method,label,train_mse,test_mse,nonzeros\n";
  pareto << "task,method,label,test_mse,nonzeros\n";

  struct Entry {
    std::string method, label;
    double test_mse;
    int nonzeros;
  };
  std::map<std::string, std::vector<Entry>> by_task;
  for (const auto& path : result_files) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "report: cannot open " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Io, "report: " + path + ": " + e.what());
    }
    const std::string task = j.value("task", std::string("unknown"));
    const std::string method = j.value("kind", std::string("unknown"));
    const int selected = j.value("selected", -1);
    const auto& runs = j.at("runs");
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& r = runs[i];
      const std::string label = r.value("label", std::string());
      const double tr = r.at("train_mse").get<double>(), te = r.at("test_mse").get<double>();
      const int nz = r.at("nonzeros").get<int>();
      const bool diverged = r.value("diverged", false);
      summary << path << ',' << task << ',' << method << ',' << i << ',' << label << ',' << tr << ',' << te << ',' << nz
              << ',' << (diverged ? 1 : 0) << ',' << (static_cast<int>(i) == selected ? 1 : 0) << '\n';
      if (static_cast<int>(i) == selected) best << task << ',' << method << ',' << label << ',' << tr << ',' << te << ',' << nz << '\n';
      if (!diverged && std::isfinite(te)) by_task[task].push_back({method, label, te, nz});
    }
  }
  for (const auto& [task, entries] : by_task) {
    std::vector<ParetoPoint> pts;
    for (std::size_t i = 0; i < entries.size(); ++i) pts.push_back({entries[i].test_mse, entries[i].nonzeros, static_cast<int>(i)});
    for (const auto& p : pareto_extract(pts)) {
      const auto& e = entries[static_cast<std::size_t>(p.index)];
      pareto << task << ',' << e.method << ',' << e.label << ',' << e.test_mse << ',' << e.nonzeros << '\n';
    }
  }
}

}  // namespace swatnn

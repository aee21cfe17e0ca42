#include "swatnn/config.hpp"

#include "swatnn/error.hpp"

#include <fstream>
#include <set>

namespace swatnn {

namespace {

// Reads known keys from an object and rejects the rest on finish().
class Reader {
 public:
  Reader(const Json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    require(j_.is_object(), ErrorKind::Config, ctx_ + ": expected a JSON object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(ErrorKind::Config, "unknown key '" + ctx_ + "." + k + "'");
  }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Config, ctx_ + "." + key + ": " + e.what());
    }
  }
  const Json* sub(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string path(const std::string& key) const { return ctx_ + "." + key; }

 private:
  const Json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

Json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const Json& j, Eigen::Index expected, const std::string& what) {
  require(j.is_array(), ErrorKind::Config, what + ": expected an array");
  require(expected < 0 || static_cast<Eigen::Index>(j.size()) == expected, ErrorKind::Shape, what + ": wrong length");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Matrix matrix_from_json_sized(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  require(j.is_array() && static_cast<Eigen::Index>(j.size()) == rows, ErrorKind::Shape, what + ": wrong row count");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, ErrorKind::Shape,
            what + ": wrong column count");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

std::string precision_name(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }
Precision precision_from_name(const std::string& s) {
  if (s == "f64") return Precision::F64;
  if (s == "f32") return Precision::F32;
  fail(ErrorKind::Config, "precision must be 'f64' or 'f32', got '" + s + "'");
}

Json pair_json(std::pair<int, int> p) { return Json::array({p.first, p.second}); }

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  require(j.is_array(), ErrorKind::Config, what + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  return matrix_from_json_sized(j, rows, cols, what);
}

Json mlp_to_json(const Mlp& mlp) {
  Json j;
  j["input_dim"] = mlp.input_dim;
  j["output_dim"] = mlp.output_dim;
  j["layers"] = Json::array();
  for (const auto& l : mlp.layers) {
    Json lj;
    lj["weights"] = matrix_to_json(l.weights);
    lj["biases"] = vector_to_json(l.biases);
    lj["act_logits"] = matrix_to_json(l.act_logits);
    Json names = Json::array();
    for (Eigen::Index h = 0; h < l.act_logits.rows(); ++h)
      names.push_back(std::string(activation_name(argmax_activation(l.act_logits.row(h)))));
    lj["activations"] = names;
    lj["neuron_mask"] = vector_to_json(l.neuron_mask);
    j["layers"].push_back(std::move(lj));
  }
  j["output_weights"] = matrix_to_json(mlp.output_weights);
  j["output_biases"] = vector_to_json(mlp.output_biases);
  return j;
}

Mlp mlp_from_json(const Json& j) {
  Mlp m;
  Reader r(j, "mlp");
  r.get("input_dim", m.input_dim);
  r.get("output_dim", m.output_dim);
  require(m.input_dim >= 1 && m.output_dim >= 1, ErrorKind::Shape, "mlp: input_dim and output_dim must be positive");
  const Json* layers = r.sub("layers");
  int fan_in = m.input_dim;
  if (layers != nullptr) {
    require(layers->is_array(), ErrorKind::Config, "mlp.layers: expected an array");
    for (std::size_t i = 0; i < layers->size(); ++i) {
      const std::string ctx = "mlp.layers[" + std::to_string(i) + "]";
      Reader lr((*layers)[i], ctx);
      const Json* biases = lr.sub("biases");
      require(biases != nullptr, ErrorKind::Config, ctx + ": missing biases");
      HiddenLayer l;
      l.biases = vector_from_json(*biases, -1, ctx + ".biases");
      const Eigen::Index w = l.biases.size();
      const Json* weights = lr.sub("weights");
      require(weights != nullptr, ErrorKind::Config, ctx + ": missing weights");
      l.weights = matrix_from_json_sized(*weights, fan_in, w, ctx + ".weights");
      const Json* logits = lr.sub("act_logits");
      const Json* names = lr.sub("activations");
      if (logits != nullptr) {
        l.act_logits = matrix_from_json_sized(*logits, w, kNumActivations, ctx + ".act_logits");
      } else {
        require(names != nullptr && names->is_array() && static_cast<Eigen::Index>(names->size()) == w,
                ErrorKind::Config, ctx + ": needs act_logits or one activation name per neuron");
        std::vector<ActivationKind> acts;
        for (const auto& n : *names) acts.push_back(activation_from_name(n.get<std::string>()));
        l.act_logits = saturated_logits(acts);
      }
      const Json* mask = lr.sub("neuron_mask");
      l.neuron_mask = mask != nullptr ? vector_from_json(*mask, w, ctx + ".neuron_mask") : Vector::Ones(w);
      m.layers.push_back(std::move(l));
      fan_in = static_cast<int>(w);
    }
  }
  const Json* ow = r.sub("output_weights");
  const Json* ob = r.sub("output_biases");
  require(ow != nullptr && ob != nullptr, ErrorKind::Config, "mlp: missing output_weights or output_biases");
  m.output_weights = matrix_from_json_sized(*ow, fan_in, m.output_dim, "mlp.output_weights");
  m.output_biases = vector_from_json(*ob, m.output_dim, "mlp.output_biases");
  m.validate();
  return m;
}

void save_mlp(const std::string& path, const Mlp& mlp) { write_json_file(path, mlp_to_json(mlp)); }
Mlp load_mlp(const std::string& path) { return mlp_from_json(read_json_file(path)); }

Json layout_to_json(const RepLayout& l) {
  return {{"max_neurons", l.max_neurons},
          {"max_hidden_layers", l.max_hidden_layers},
          {"num_activations", l.num_activations},
          {"input_dim_max", l.input_dim_max},
          {"output_dim_max", l.output_dim_max}};
}

RepLayout layout_from_json(const Json& j) {
  RepLayout l;
  {
    Reader r(j, "layout");
    r.get("max_neurons", l.max_neurons);
    r.get("max_hidden_layers", l.max_hidden_layers);
    r.get("num_activations", l.num_activations);
    r.get("input_dim_max", l.input_dim_max);
    r.get("output_dim_max", l.output_dim_max);
  }
  l.validate();
  return l;
}

Json config_to_json(const AutoencoderConfig& c) {
  return {{"d_model", c.d_model},
          {"n_heads", c.n_heads},
          {"n_layers", c.n_layers},
          {"layout", layout_to_json(c.layout)},
          {"input_dim", c.input_dim},
          {"output_dim", c.output_dim},
          {"precision", precision_name(c.precision)},
          {"soft_min", c.soft_min},
          {"soft_min_temperature", c.soft_min_temperature}};
}

AutoencoderConfig autoencoder_config_from_json(const Json& j) {
  AutoencoderConfig c;
  {
    Reader r(j, "autoencoder");
    r.get("d_model", c.d_model);
    r.get("n_heads", c.n_heads);
    r.get("n_layers", c.n_layers);
    if (const Json* l = r.sub("layout")) c.layout = layout_from_json(*l);
    r.get("input_dim", c.input_dim);
    r.get("output_dim", c.output_dim);
    std::string p = precision_name(c.precision);
    r.get("precision", p);
    c.precision = precision_from_name(p);
    r.get("soft_min", c.soft_min);
    r.get("soft_min_temperature", c.soft_min_temperature);
  }
  c.validate();
  return c;
}

Json sample_options_to_json(const SampleOptions& s) {
  return {{"depth_range", pair_json(s.depth_range)},
          {"width_range", pair_json(s.width_range)},
          {"input_dim_range", pair_json(s.input_dim_range)},
          {"output_dim_range", pair_json(s.output_dim_range)},
          {"weight_bound", s.weight_bound},
          {"bias_bound", s.bias_bound}};
}

SampleOptions sample_options_from_json(const Json& j) {
  SampleOptions s;
  Reader r(j, "sample");
  r.get("depth_range", s.depth_range);
  r.get("width_range", s.width_range);
  r.get("input_dim_range", s.input_dim_range);
  r.get("output_dim_range", s.output_dim_range);
  r.get("weight_bound", s.weight_bound);
  r.get("bias_bound", s.bias_bound);
  return s;
}

Json train_spec_to_json(const TrainSpec& t) {
  return {{"epochs", t.epochs},
          {"batches_per_epoch", t.batches_per_epoch},
          {"batch_size", t.batch_size},
          {"inputs_per_mlp", t.inputs_per_mlp},
          {"lr", t.lr},
          {"clip_norm", t.clip_norm},
          {"seed", t.seed},
          {"threads", t.threads},
          {"checkpoint_every", t.checkpoint_every},
          {"sample", sample_options_to_json(t.sample)}};
}

TrainSpec train_spec_from_json(const Json& j) {
  TrainSpec t;
  Reader r(j, "train");
  r.get("epochs", t.epochs);
  r.get("batches_per_epoch", t.batches_per_epoch);
  r.get("batch_size", t.batch_size);
  r.get("inputs_per_mlp", t.inputs_per_mlp);
  r.get("lr", t.lr);
  r.get("clip_norm", t.clip_norm);
  r.get("seed", t.seed);
  r.get("threads", t.threads);
  r.get("checkpoint_every", t.checkpoint_every);
  if (const Json* s = r.sub("sample")) t.sample = sample_options_from_json(*s);
  return t;
}

Json penalty_to_json(const PenaltyConfig& p) {
  return {{"lambda_s", p.lambda_s}, {"mu_1", p.mu_1},         {"mu_c", p.mu_c},
          {"alpha", p.alpha},       {"beta", p.beta},         {"t_s_init", p.t_s_init},
          {"t_n", p.t_n},           {"soft_scale", p.soft_scale}, {"aggregate_soft_count", p.aggregate_soft_count}};
}

PenaltyConfig penalty_from_json(const Json& j) {
  if (j.is_string()) return penalty_preset(penalty_level_from_name(j.get<std::string>()));
  PenaltyConfig p;
  {
    Reader r(j, "penalties");
    std::string level;
    r.get("level", level);
    if (!level.empty()) p = penalty_preset(penalty_level_from_name(level));
    r.get("lambda_s", p.lambda_s);
    r.get("mu_1", p.mu_1);
    r.get("mu_c", p.mu_c);
    r.get("alpha", p.alpha);
    r.get("beta", p.beta);
    r.get("t_s_init", p.t_s_init);
    r.get("t_n", p.t_n);
    r.get("soft_scale", p.soft_scale);
    r.get("aggregate_soft_count", p.aggregate_soft_count);
  }
  p.validate();
  return p;
}

Json search_config_to_json(const SearchConfig& c) {
  return {{"steps", c.steps},
          {"lr", c.lr},
          {"seed", c.seed},
          {"decoder_set", c.decoder_set},
          {"penalties", penalty_to_json(c.penalties)},
          {"anneal", {{"t_init", c.anneal.t_init}, {"t_final", c.anneal.t_final}, {"e_anneal", c.anneal.e_anneal}}},
          {"selection_tolerance", c.selection_tolerance},
          {"optimizer", c.optimizer == SearchOptimizer::Adam ? "adam" : "gd"},
          {"divergence_threshold", c.divergence_threshold},
          {"threads", c.threads}};
}

SearchConfig search_config_from_json(const Json& j) {
  SearchConfig c;
  Reader r(j, "search");
  r.get("steps", c.steps);
  r.get("lr", c.lr);
  r.get("seed", c.seed);
  r.get("decoder_set", c.decoder_set);
  if (const Json* p = r.sub("penalties")) c.penalties = penalty_from_json(*p);
  if (const Json* a = r.sub("anneal")) {
    Reader ar(*a, "search.anneal");
    ar.get("t_init", c.anneal.t_init);
    ar.get("t_final", c.anneal.t_final);
    ar.get("e_anneal", c.anneal.e_anneal);
  }
  r.get("selection_tolerance", c.selection_tolerance);
  std::string opt = c.optimizer == SearchOptimizer::Adam ? "adam" : "gd";
  r.get("optimizer", opt);
  require(opt == "gd" || opt == "adam", ErrorKind::Config, "search.optimizer must be 'gd' or 'adam'");
  c.optimizer = opt == "adam" ? SearchOptimizer::Adam : SearchOptimizer::GradientDescent;
  r.get("divergence_threshold", c.divergence_threshold);
  r.get("threads", c.threads);
  return c;
}

Json traditional_config_to_json(const TraditionalConfig& c) {
  return {{"epochs", c.epochs},
          {"lr", c.lr},
          {"seed", c.seed},
          {"init_range", c.init_range},
          {"divergence_threshold", c.divergence_threshold}};
}

TraditionalConfig traditional_config_from_json(const Json& j) {
  TraditionalConfig c;
  {
    Reader r(j, "traditional");
    r.get("epochs", c.epochs);
    r.get("lr", c.lr);
    r.get("seed", c.seed);
    r.get("init_range", c.init_range);
    r.get("divergence_threshold", c.divergence_threshold);
  }
  c.validate();
  return c;
}

Json admm_config_to_json(const AdmmConfig& c) {
  return {{"rho", c.rho},
          {"threshold", c.threshold},
          {"outer_iters", c.outer_iters},
          {"inner_steps", c.inner_steps},
          {"inner_lr", c.inner_lr},
          {"finetune_steps", c.finetune_steps},
          {"divergence_threshold", c.divergence_threshold}};
}

AdmmConfig admm_config_from_json(const Json& j) {
  AdmmConfig c;
  {
    Reader r(j, "admm");
    r.get("rho", c.rho);
    r.get("threshold", c.threshold);
    r.get("outer_iters", c.outer_iters);
    r.get("inner_steps", c.inner_steps);
    r.get("inner_lr", c.inner_lr);
    r.get("finetune_steps", c.finetune_steps);
    r.get("divergence_threshold", c.divergence_threshold);
  }
  c.validate();
  return c;
}

Json smoothness_config_to_json(const SmoothnessConfig& c) {
  return {{"n_neighbors", c.n_neighbors}, {"noise_std", c.noise_std}, {"grid_step", c.grid_step},
          {"grid_range", c.grid_range},   {"n_inputs", c.n_inputs},   {"seed", c.seed},
          {"input_dim", c.input_dim},     {"output_dim", c.output_dim}, {"threads", c.threads}};
}

SmoothnessConfig smoothness_config_from_json(const Json& j) {
  SmoothnessConfig c;
  {
    Reader r(j, "smoothness");
    r.get("n_neighbors", c.n_neighbors);
    r.get("noise_std", c.noise_std);
    r.get("grid_step", c.grid_step);
    r.get("grid_range", c.grid_range);
    r.get("n_inputs", c.n_inputs);
    r.get("seed", c.seed);
    r.get("input_dim", c.input_dim);
    r.get("output_dim", c.output_dim);
    r.get("threads", c.threads);
  }
  c.validate();
  return c;
}

Json compress_config_to_json(const CompressConfig& c) {
  return {{"cuts", c.cuts},
          {"target_depths", c.target_depths},
          {"search", search_config_to_json(c.search)},
          {"train_inputs", c.train_inputs},
          {"test_inputs", c.test_inputs},
          {"seed", c.seed}};
}

CompressConfig compress_config_from_json(const Json& j) {
  CompressConfig c;
  Reader r(j, "compress");
  r.get("cuts", c.cuts);
  r.get("target_depths", c.target_depths);
  if (const Json* s = r.sub("search")) c.search = search_config_from_json(*s);
  r.get("train_inputs", c.train_inputs);
  r.get("test_inputs", c.test_inputs);
  r.get("seed", c.seed);
  return c;
}

Json task_spec_to_json(const TaskSpec& s) {
  return {{"name", s.name},
          {"function", s.function},
          {"domain", {{"lo", s.domain.lo}, {"hi", s.domain.hi}}},
          {"train_count", s.train_count},
          {"test_count", s.test_count},
          {"seed", s.seed}};
}

namespace {
// JSON has no representation for non-finite numbers; they become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
}  // namespace

Json decoder_result_to_json(const DecoderResult& r) {
  return {{"label", "decoder " + std::to_string(r.decoder)},
          {"decoder", r.decoder},
          {"train_mse", number(r.train_mse)},
          {"test_mse", number(r.test_mse)},
          {"nonzeros", r.nonzeros},
          {"active_neurons", r.active_neurons},
          {"diverged", r.diverged},
          {"steps_run", r.steps_run},
          {"final_loss", r.trajectory.empty() ? Json(nullptr) : number(r.trajectory.back())},
          {"t_s", r.t_s},
          {"z", matrix_to_json(r.z)},
          {"mlp", mlp_to_json(r.mlp)}};
}

Json baseline_result_to_json(const BaselineResult& r, const std::string& label) {
  return {{"label", label},
          {"train_mse", number(r.train_mse)},
          {"test_mse", number(r.test_mse)},
          {"nonzeros", r.nonzeros},
          {"active_neurons", r.active_neurons},
          {"diverged", r.diverged},
          {"steps_run", r.trajectory.size()},
          {"final_loss", r.trajectory.empty() ? Json(nullptr) : number(r.trajectory.back())},
          {"train_mse_before", number(r.train_mse_before)},
          {"test_mse_before", number(r.test_mse_before)},
          {"nonzeros_before", r.nonzeros_before},
          {"mlp", mlp_to_json(r.mlp)}};
}

Json search_result_to_json(const SearchResult& r, const std::string& task) {
  Json runs = Json::array();
  for (const auto& d : r.per_decoder) runs.push_back(decoder_result_to_json(d));
  return {{"kind", "search"}, {"task", task}, {"runs", runs}, {"selected", r.selected}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path);
  out << j.dump(2) << "\n";
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path);
}

}  // namespace swatnn

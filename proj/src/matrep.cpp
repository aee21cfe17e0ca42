#include "swatnn/matrep.hpp"

#include "swatnn/binio.hpp"
#include "swatnn/error.hpp"
#include "swatnn/rng.hpp"

#include <algorithm>
#include <string>

namespace swatnn {

namespace {
constexpr char kRepMagic[9] = "SWNNREP1";
constexpr std::uint32_t kRepVersion = 1;
}  // namespace

void RepLayout::validate() const {
  require(max_neurons >= 1 && max_hidden_layers >= 1, ErrorKind::Layout, "layout: N and L must be positive");
  require(num_activations == kNumActivations, ErrorKind::Layout, "layout: activation count must be 3");
  require(input_dim_max >= 1 && output_dim_max >= 1, ErrorKind::Layout, "layout: boundary sizes must be positive");
  require(input_dim_max <= max_neurons && output_dim_max <= max_neurons, ErrorKind::Layout,
          "layout: boundary sizes cannot exceed N");
}

MatRep pack(const Mlp& mlp, const RepLayout& layout) {
  layout.validate();
  mlp.validate();
  const int n = layout.max_neurons;
  require(mlp.depth() >= 1 && mlp.depth() <= layout.max_hidden_layers, ErrorKind::Layout,
          "pack: depth " + std::to_string(mlp.depth()) + " outside [1, " + std::to_string(layout.max_hidden_layers) + "]");
  require(mlp.input_dim <= layout.input_dim_max, ErrorKind::Layout, "pack: input dimension exceeds layout");
  require(mlp.output_dim <= layout.output_dim_max, ErrorKind::Layout, "pack: output dimension exceeds layout");
  for (const auto& l : mlp.layers)
    require(l.width() <= n, ErrorKind::Layout, "pack: layer width " + std::to_string(l.width()) + " exceeds N");

  MatRep rep;
  rep.values = Matrix::Zero(n, layout.columns());
  rep.validity = Matrix::Zero(n, layout.columns());
  for (int j = 0; j < mlp.depth(); ++j) {
    const auto& l = mlp.layers[j];
    const int fan_in = mlp.fan_in(j);
    const int w = l.width();
    rep.values.block(0, layout.hidden_block(j), fan_in, w) = l.weights;
    rep.validity.block(0, layout.hidden_block(j), fan_in, w).setOnes();
    rep.values.block(0, layout.bias_column(j), w, 1) = l.biases;
    rep.validity.block(0, layout.bias_column(j), w, 1).setOnes();
    for (int h = 0; h < w; ++h)
      rep.values(h, layout.activation_column(j) + static_cast<int>(argmax_activation(l.act_logits.row(h)))) = 1.0;
    rep.validity.block(0, layout.activation_column(j), w, kNumActivations).setOnes();
    rep.values.block(0, layout.mask_column(j), w, 1) = l.neuron_mask;
  }
  const int last = mlp.layers.back().width();
  rep.values.block(0, layout.output_block(), last, mlp.output_dim) = mlp.output_weights;
  rep.validity.block(0, layout.output_block(), last, mlp.output_dim).setOnes();
  rep.values.block(0, layout.output_bias_column(), mlp.output_dim, 1) = mlp.output_biases;
  rep.validity.block(0, layout.output_bias_column(), mlp.output_dim, 1).setOnes();
  rep.validity.block(0, layout.mask_column(0), n, layout.max_hidden_layers).setOnes();
  return rep;
}

namespace {

int count_valid_rows(const Matrix& validity, int col) {
  int r = 0;
  while (r < validity.rows() && validity(r, col) != 0.0) ++r;
  return r;
}

}  // namespace

Mlp unpack(const MatRep& rep, const RepLayout& layout, int hidden_layers, bool hard, double threshold) {
  layout.validate();
  require(hidden_layers >= 1 && hidden_layers <= layout.max_hidden_layers, ErrorKind::Layout,
          "unpack: hidden layer count out of range");
  require(rep.values.rows() == layout.max_neurons && rep.values.cols() == layout.columns() &&
              rep.validity.rows() == rep.values.rows() && rep.validity.cols() == rep.values.cols(),
          ErrorKind::Layout, "unpack: representation does not match layout");

  Mlp m;
  m.input_dim = count_valid_rows(rep.validity, layout.hidden_block(0));
  m.output_dim = count_valid_rows(rep.validity, layout.output_bias_column());
  require(m.input_dim >= 1 && m.output_dim >= 1, ErrorKind::Layout, "unpack: empty boundary layer");
  int fan_in = m.input_dim;
  for (int j = 0; j < hidden_layers; ++j) {
    const int w = count_valid_rows(rep.validity, layout.activation_column(j));
    require(w >= 1, ErrorKind::Layout, "unpack: hidden block " + std::to_string(j) + " is empty");
    HiddenLayer l;
    l.weights = rep.values.block(0, layout.hidden_block(j), fan_in, w);
    l.biases = rep.values.block(0, layout.bias_column(j), w, 1);
    Matrix f = rep.values.block(0, layout.activation_column(j), w, kNumActivations);
    Vector mask = rep.values.block(0, layout.mask_column(j), w, 1);
    if (hard) {
      std::vector<ActivationKind> acts;
      for (int h = 0; h < w; ++h) acts.push_back(argmax_activation(f.row(h)));
      l.act_logits = saturated_logits(acts);
      l.neuron_mask = mask.unaryExpr([threshold](double v) { return v >= threshold ? 1.0 : 0.0; });
    } else {
      l.act_logits = std::move(f);
      l.neuron_mask = mask.cwiseMax(0.0).cwiseMin(1.0);
    }
    m.layers.push_back(std::move(l));
    fan_in = w;
  }
  m.output_weights = rep.values.block(0, layout.output_block(), fan_in, m.output_dim);
  m.output_biases = rep.values.block(0, layout.output_bias_column(), m.output_dim, 1);
  return m;
}

Matrix structural_validity(const RepLayout& layout, int hidden_layers, int input_dim, int output_dim) {
  layout.validate();
  require(hidden_layers >= 1 && hidden_layers <= layout.max_hidden_layers, ErrorKind::Layout,
          "structural_validity: hidden layer count out of range");
  require(input_dim >= 1 && input_dim <= layout.input_dim_max && output_dim >= 1 && output_dim <= layout.output_dim_max,
          ErrorKind::Layout, "structural_validity: boundary dimensions exceed layout");
  const int n = layout.max_neurons;
  Matrix v = Matrix::Zero(n, layout.columns());
  for (int j = 0; j < hidden_layers; ++j) {
    const int fan_in = j == 0 ? input_dim : n;
    v.block(0, layout.hidden_block(j), fan_in, n).setOnes();
    v.block(0, layout.bias_column(j), n, 1 + kNumActivations).setOnes();
  }
  v.block(0, layout.output_block(), n, output_dim).setOnes();
  v.block(0, layout.output_bias_column(), output_dim, 1).setOnes();
  v.block(0, layout.mask_column(0), n, layout.max_hidden_layers).setOnes();
  return v;
}

MlpVars unpack_vars(ad::Var values, const RepLayout& layout, int hidden_layers, int input_dim, int output_dim) {
  layout.validate();
  require(hidden_layers >= 1 && hidden_layers <= layout.max_hidden_layers, ErrorKind::Layout,
          "unpack_vars: hidden layer count out of range");
  require(values.rows() == layout.max_neurons && values.cols() == layout.columns(), ErrorKind::Layout,
          "unpack_vars: representation does not match layout");
  require(input_dim >= 1 && input_dim <= layout.input_dim_max && output_dim >= 1 && output_dim <= layout.output_dim_max,
          ErrorKind::Layout, "unpack_vars: boundary dimensions exceed layout");
  const int n = layout.max_neurons;
  MlpVars m;
  m.input_dim = input_dim;
  m.output_dim = output_dim;
  int fan_in = input_dim;
  for (int j = 0; j < hidden_layers; ++j) {
    MlpVars::Layer l;
    l.weights = ad::slice(values, 0, layout.hidden_block(j), fan_in, n);
    l.biases = ad::transpose(ad::slice(values, 0, layout.bias_column(j), n, 1));
    l.act_logits = ad::slice(values, 0, layout.activation_column(j), n, kNumActivations);
    l.neuron_mask = ad::transpose(ad::slice(values, 0, layout.mask_column(j), n, 1));
    m.layers.push_back(l);
    fan_in = n;
  }
  m.output_weights = ad::slice(values, 0, layout.output_block(), n, output_dim);
  m.output_biases = ad::transpose(ad::slice(values, 0, layout.output_bias_column(), output_dim, 1));
  return m;
}

Mlp sample_random_mlp(const RepLayout& layout, std::uint64_t seed, const SampleOptions& opts) {
  layout.validate();
  auto in_range = [](std::pair<int, int> r, int lo, int hi) { return r.first >= lo && r.first <= r.second && r.second <= hi; };
  require(in_range(opts.depth_range, 1, layout.max_hidden_layers), ErrorKind::Layout, "sample: depth range outside layout");
  require(in_range(opts.width_range, 1, layout.max_neurons), ErrorKind::Layout, "sample: width range outside layout");
  require(in_range(opts.input_dim_range, 1, layout.input_dim_max), ErrorKind::Layout, "sample: input range outside layout");
  require(in_range(opts.output_dim_range, 1, layout.output_dim_max), ErrorKind::Layout, "sample: output range outside layout");

  Rng rng(seed);
  Mlp m;
  m.input_dim = rng.uniform_int(opts.input_dim_range.first, opts.input_dim_range.second);
  m.output_dim = rng.uniform_int(opts.output_dim_range.first, opts.output_dim_range.second);
  const int depth = rng.uniform_int(opts.depth_range.first, opts.depth_range.second);
  int fan_in = m.input_dim;
  for (int j = 0; j < depth; ++j) {
    const int w = rng.uniform_int(opts.width_range.first, opts.width_range.second);
    Matrix weights(fan_in, w);
    for (int c = 0; c < w; ++c)
      for (int r = 0; r < fan_in; ++r) weights(r, c) = rng.uniform(-opts.weight_bound, opts.weight_bound);
    Vector biases(w);
    for (int h = 0; h < w; ++h) biases(h) = rng.uniform(-opts.bias_bound, opts.bias_bound);
    std::vector<ActivationKind> acts(w);
    for (auto& a : acts) a = static_cast<ActivationKind>(rng.uniform_int(0, kNumActivations - 1));
    m.layers.push_back(make_hard_layer(std::move(weights), std::move(biases), acts));
    fan_in = w;
  }
  m.output_weights.resize(fan_in, m.output_dim);
  for (int c = 0; c < m.output_dim; ++c)
    for (int r = 0; r < fan_in; ++r) m.output_weights(r, c) = rng.uniform(-opts.weight_bound, opts.weight_bound);
  m.output_biases.resize(m.output_dim);
  for (int o = 0; o < m.output_dim; ++o) m.output_biases(o) = rng.uniform(-opts.bias_bound, opts.bias_bound);
  return m;
}

void write_matrep(std::ostream& out, const MatRep& rep, const RepLayout& layout) {
  require(rep.values.rows() == layout.max_neurons && rep.values.cols() == layout.columns(), ErrorKind::Layout,
          "write_matrep: representation does not match layout");
  binio::put_magic(out, kRepMagic);
  binio::put_u32(out, kRepVersion);
  binio::put_u32(out, static_cast<std::uint32_t>(layout.max_neurons));
  binio::put_u32(out, static_cast<std::uint32_t>(layout.columns()));
  binio::put_u32(out, static_cast<std::uint32_t>(layout.max_hidden_layers));
  binio::put_u32(out, static_cast<std::uint32_t>(layout.num_activations));
  for (Eigen::Index r = 0; r < rep.values.rows(); ++r)
    for (Eigen::Index c = 0; c < rep.values.cols(); ++c) binio::put_f64(out, rep.values(r, c));
  const auto total = rep.values.size();
  std::string bits(static_cast<std::size_t>((total + 7) / 8), '\0');
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rep.validity.rows(); ++r)
    for (Eigen::Index c = 0; c < rep.validity.cols(); ++c, ++k)
      if (rep.validity(r, c) != 0.0) bits[static_cast<std::size_t>(k / 8)] |= static_cast<char>(1 << (k % 8));
  out.write(bits.data(), static_cast<std::streamsize>(bits.size()));
  require(static_cast<bool>(out), ErrorKind::Io, "write_matrep: write failed");
}

MatRep read_matrep(std::istream& in, RepLayout* layout_out) {
  binio::expect_magic(in, kRepMagic, "matrix representation");
  const auto version = binio::get_u32(in);
  require(version == kRepVersion, ErrorKind::Io, "read_matrep: unsupported version " + std::to_string(version));
  const int n = static_cast<int>(binio::get_u32(in));
  const int c = static_cast<int>(binio::get_u32(in));
  const int l = static_cast<int>(binio::get_u32(in));
  const int a = static_cast<int>(binio::get_u32(in));
  RepLayout layout;
  layout.max_neurons = n;
  layout.max_hidden_layers = l;
  layout.num_activations = a;
  layout.input_dim_max = n;
  layout.output_dim_max = n;
  layout.validate();
  require(layout.columns() == c, ErrorKind::Io, "read_matrep: column count inconsistent with N, L, A");
  MatRep rep;
  rep.values.resize(n, c);
  rep.validity.resize(n, c);
  for (int r = 0; r < n; ++r)
    for (int col = 0; col < c; ++col) rep.values(r, col) = binio::get_f64(in);
  std::string bits(static_cast<std::size_t>((n * c + 7) / 8), '\0');
  binio::read_exact(in, bits.data(), bits.size());
  int k = 0;
  for (int r = 0; r < n; ++r)
    for (int col = 0; col < c; ++col, ++k)
      rep.validity(r, col) = (static_cast<unsigned char>(bits[static_cast<std::size_t>(k / 8)]) >> (k % 8)) & 1u ? 1.0 : 0.0;
  if (layout_out) *layout_out = layout;
  return rep;
}

}  // namespace swatnn

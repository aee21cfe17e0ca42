#include "swatnn/bench.hpp"

#include "swatnn/binio.hpp"
#include "swatnn/error.hpp"
#include "swatnn/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

namespace swatnn {

namespace {

using std::numbers::pi;

std::map<std::string, TaskFunction> builtin_functions() {
  std::map<std::string, TaskFunction> f;
  f["constant"] = [](double, double) { return 5.0; };
  f["linear"] = [](double x, double y) { return 0.6 * x - 0.3 * y + 0.2; };
  f["sphere"] = [](double x, double y) { return x * x + y * y; };
  f["rosenbrock"] = [](double x, double y) { return (1 - x) * (1 - x) + 100 * (y - x * x) * (y - x * x); };
  f["rastrigin"] = [](double x, double y) {
    return 20.0 + (x * x - 10 * std::cos(2 * pi * x)) + (y * y - 10 * std::cos(2 * pi * y));
  };
  f["ackley"] = [](double x, double y) {
    return -20.0 * std::exp(-0.2 * std::sqrt(0.5 * (x * x + y * y))) -
           std::exp(0.5 * (std::cos(2 * pi * x) + std::cos(2 * pi * y))) + std::numbers::e + 20.0;
  };
  f["griewank"] = [](double x, double y) {
    return 1.0 + (x * x + y * y) / 4000.0 - std::cos(x) * std::cos(y / std::sqrt(2.0));
  };
  f["schwefel"] = [](double x, double y) {
    return 418.9829 * 2 - x * std::sin(std::sqrt(std::abs(x))) - y * std::sin(std::sqrt(std::abs(y)));
  };
  f["himmelblau"] = [](double x, double y) {
    return (x * x + y - 11) * (x * x + y - 11) + (x + y * y - 7) * (x + y * y - 7);
  };
  f["levy"] = [](double x, double y) {
    const double w1 = 1 + (x - 1) / 4, w2 = 1 + (y - 1) / 4;
    const double s1 = std::sin(pi * w1), s2 = std::sin(pi * w1 + 1), s3 = std::sin(2 * pi * w2);
    return s1 * s1 + (w1 - 1) * (w1 - 1) * (1 + 10 * s2 * s2) + (w2 - 1) * (w2 - 1) * (1 + s3 * s3);
  };
  f["booth"] = [](double x, double y) { return (x + 2 * y - 7) * (x + 2 * y - 7) + (2 * x + y - 5) * (2 * x + y - 5); };
  f["three_hump_camel"] = [](double x, double y) {
    return 2 * x * x - 1.05 * std::pow(x, 4) + std::pow(x, 6) / 6 + x * y + y * y;
  };
  f["easom"] = [](double x, double y) {
    return -std::cos(x) * std::cos(y) * std::exp(-((x - pi) * (x - pi) + (y - pi) * (y - pi)));
  };
  f["styblinski_tang"] = [](double x, double y) {
    return 0.5 * (std::pow(x, 4) - 16 * x * x + 5 * x + std::pow(y, 4) - 16 * y * y + 5 * y);
  };
  return f;
}

struct Registry {
  std::mutex mu;
  std::map<std::string, TaskFunction> fns = builtin_functions();
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_task_function(const std::string& id, TaskFunction fn) {
  require(static_cast<bool>(fn), ErrorKind::Config, "register_task_function: empty function");
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.fns[id] = std::move(fn);
}

bool has_task_function(const std::string& id) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  return r.fns.count(id) > 0;
}

double evaluate_task_function(const std::string& id, double x1, double x2) {
  TaskFunction fn;
  {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    auto it = r.fns.find(id);
    if (it == r.fns.end()) fail(ErrorKind::UnknownTask, "unknown task function '" + id + "'");
    fn = it->second;
  }
  return fn(x1, x2);
}

Eigen::MatrixXd Normalization::normalize_inputs(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    out.col(j) = 2.0 * (x.col(j).array() - input_lo(j)) / (input_hi(j) - input_lo(j)) - 1.0;
  return out;
}

Eigen::MatrixXd Normalization::denormalize_inputs(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    out.col(j) = (x.col(j).array() + 1.0) * 0.5 * (input_hi(j) - input_lo(j)) + input_lo(j);
  return out;
}

TaskDataset generate(const TaskSpec& spec) {
  require(has_task_function(spec.function), ErrorKind::UnknownTask, "unknown task function '" + spec.function + "'");
  require(spec.train_count > 0 && spec.test_count > 0, ErrorKind::Config, "generate: sample counts must be positive");
  for (int d = 0; d < 2; ++d)
    require(spec.domain.hi[d] > spec.domain.lo[d], ErrorKind::Config, "generate: degenerate domain box");

  auto sample = [&](const char* tag, int count, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    Rng rng(spec.seed, tag);
    x.resize(count, 2);
    y.resize(count, 1);
    for (int i = 0; i < count; ++i) {
      for (int d = 0; d < 2; ++d) x(i, d) = rng.uniform(spec.domain.lo[d], spec.domain.hi[d]);
      y(i, 0) = evaluate_task_function(spec.function, x(i, 0), x(i, 1));
    }
  };
  Eigen::MatrixXd xr_train, yr_train, xr_test, yr_test;
  sample("train", spec.train_count, xr_train, yr_train);
  sample("test", spec.test_count, xr_test, yr_test);

  double max_abs = std::max(yr_train.cwiseAbs().maxCoeff(), yr_test.cwiseAbs().maxCoeff());
  for (double cx : {spec.domain.lo[0], spec.domain.hi[0]})
    for (double cy : {spec.domain.lo[1], spec.domain.hi[1]})
      max_abs = std::max(max_abs, std::abs(evaluate_task_function(spec.function, cx, cy)));
  require(std::isfinite(max_abs), ErrorKind::Config, "generate: task produced non-finite values");

  TaskDataset ds;
  ds.spec = spec;
  ds.norm.input_lo = Eigen::Vector2d(spec.domain.lo[0], spec.domain.lo[1]);
  ds.norm.input_hi = Eigen::Vector2d(spec.domain.hi[0], spec.domain.hi[1]);
  ds.norm.output_scale = max_abs + kOutputMargin;
  ds.x_train = ds.norm.normalize_inputs(xr_train);
  ds.x_test = ds.norm.normalize_inputs(xr_test);
  ds.y_train = ds.norm.normalize_outputs(yr_train);
  ds.y_test = ds.norm.normalize_outputs(yr_test);
  return ds;
}

std::vector<TaskSpec> builtin_suite() {
  struct Entry {
    const char* name;
    double lo, hi;
  };
  static const Entry entries[] = {
      {"constant", -1, 1},      {"linear", -1, 1},        {"sphere", -5, 5},    {"rosenbrock", -2, 2},
      {"rastrigin", -5.12, 5.12}, {"ackley", -5, 5},      {"griewank", -10, 10}, {"schwefel", -500, 500},
      {"himmelblau", -5, 5},    {"levy", -10, 10},        {"booth", -10, 10},   {"three_hump_camel", -5, 5},
      {"easom", -5, 5},         {"styblinski_tang", -5, 5},
  };
  std::vector<TaskSpec> out;
  std::uint64_t seed = 1;
  for (const auto& e : entries) {
    TaskSpec s;
    s.name = e.name;
    s.function = e.name;
    s.domain.lo = {e.lo, e.lo};
    s.domain.hi = {e.hi, e.hi};
    s.seed = seed++;
    out.push_back(s);
  }
  return out;
}

TaskSpec find_task(const std::string& name) {
  for (auto& s : builtin_suite())
    if (s.name == name) return s;
  fail(ErrorKind::UnknownTask, "unknown task '" + name + "'");
}

TaskDataset make_dataset(const std::string& name, Eigen::MatrixXd x_train, Eigen::MatrixXd y_train,
                         Eigen::MatrixXd x_test, Eigen::MatrixXd y_test) {
  require(x_train.rows() == y_train.rows() && x_test.rows() == y_test.rows() && x_train.cols() == x_test.cols() &&
              y_train.cols() == y_test.cols() && x_train.rows() > 0 && x_test.rows() > 0,
          ErrorKind::Shape, "make_dataset: inconsistent array shapes");
  TaskDataset ds;
  ds.spec.name = name;
  ds.spec.function = "custom";
  ds.spec.train_count = static_cast<int>(x_train.rows());
  ds.spec.test_count = static_cast<int>(x_test.rows());
  ds.norm.input_lo = Eigen::VectorXd::Constant(x_train.cols(), -1.0);
  ds.norm.input_hi = Eigen::VectorXd::Constant(x_train.cols(), 1.0);
  ds.norm.output_scale = 1.0;
  ds.x_train = std::move(x_train);
  ds.y_train = std::move(y_train);
  ds.x_test = std::move(x_test);
  ds.y_test = std::move(y_test);
  return ds;
}

namespace {
constexpr char kDataMagic[9] = "SWNNDSET";
constexpr std::uint32_t kDataVersion = 1;

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }
}  // namespace

std::string sidecar_path(const std::string& bin_path) {
  return std::filesystem::path(bin_path).replace_extension(".json").string();
}

void write_dataset(const std::string& bin_path, const TaskDataset& data) {
  {
    std::ofstream out(bin_path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + bin_path + " for writing");
    binio::put_magic(out, kDataMagic);
    binio::put_u32(out, kDataVersion);
    binio::put_u64(out, static_cast<std::uint64_t>(data.x_train.rows()));
    binio::put_u64(out, static_cast<std::uint64_t>(data.x_test.rows()));
    binio::put_u32(out, static_cast<std::uint32_t>(data.input_dim()));
    binio::put_u32(out, static_cast<std::uint32_t>(data.output_dim()));
    for (const auto* m : {&data.x_train, &data.y_train, &data.x_test, &data.y_test})
      for (Eigen::Index c = 0; c < m->cols(); ++c)
        for (Eigen::Index r = 0; r < m->rows(); ++r) binio::put_f64(out, (*m)(r, c));
    require(static_cast<bool>(out), ErrorKind::Io, "write_dataset: write failed");
  }
  nlohmann::json j;
  j["spec"] = {{"name", data.spec.name},
               {"function", data.spec.function},
               {"domain", {{"lo", data.spec.domain.lo}, {"hi", data.spec.domain.hi}}},
               {"train_count", data.spec.train_count},
               {"test_count", data.spec.test_count},
               {"seed", data.spec.seed}};
  j["normalization"] = {{"input_lo", to_vec(data.norm.input_lo)},
                        {"input_hi", to_vec(data.norm.input_hi)},
                        {"output_scale", data.norm.output_scale}};
  j["input_dim"] = data.input_dim();
  j["output_dim"] = data.output_dim();
  std::ofstream side(sidecar_path(bin_path));
  require(static_cast<bool>(side), ErrorKind::Io, "cannot write sidecar for " + bin_path);
  side << j.dump(2) << "\n";
}

TaskDataset read_dataset(const std::string& bin_path) {
  std::ifstream in(bin_path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open dataset " + bin_path);
  binio::expect_magic(in, kDataMagic, "dataset");
  const auto version = binio::get_u32(in);
  require(version == kDataVersion, ErrorKind::Io, "read_dataset: unsupported version");
  const auto n_train = static_cast<Eigen::Index>(binio::get_u64(in));
  const auto n_test = static_cast<Eigen::Index>(binio::get_u64(in));
  const auto in_dim = static_cast<Eigen::Index>(binio::get_u32(in));
  const auto out_dim = static_cast<Eigen::Index>(binio::get_u32(in));
  TaskDataset ds;
  ds.x_train.resize(n_train, in_dim);
  ds.y_train.resize(n_train, out_dim);
  ds.x_test.resize(n_test, in_dim);
  ds.y_test.resize(n_test, out_dim);
  for (auto* m : {&ds.x_train, &ds.y_train, &ds.x_test, &ds.y_test})
    for (Eigen::Index c = 0; c < m->cols(); ++c)
      for (Eigen::Index r = 0; r < m->rows(); ++r) (*m)(r, c) = binio::get_f64(in);

  std::ifstream side(sidecar_path(bin_path));
  require(static_cast<bool>(side), ErrorKind::Io, "missing dataset sidecar " + sidecar_path(bin_path));
  const auto j = nlohmann::json::parse(side);
  const auto& s = j.at("spec");
  ds.spec.name = s.at("name").get<std::string>();
  ds.spec.function = s.at("function").get<std::string>();
  ds.spec.domain.lo = s.at("domain").at("lo").get<std::array<double, 2>>();
  ds.spec.domain.hi = s.at("domain").at("hi").get<std::array<double, 2>>();
  ds.spec.train_count = s.at("train_count").get<int>();
  ds.spec.test_count = s.at("test_count").get<int>();
  ds.spec.seed = s.at("seed").get<std::uint64_t>();
  const auto& n = j.at("normalization");
  const auto lo = n.at("input_lo").get<std::vector<double>>();
  const auto hi = n.at("input_hi").get<std::vector<double>>();
  ds.norm.input_lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  ds.norm.input_hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  ds.norm.output_scale = n.at("output_scale").get<double>();
  return ds;
}

}  // namespace swatnn

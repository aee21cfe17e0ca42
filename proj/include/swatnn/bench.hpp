#pragma once

// Synthetic 2-D regression tasks with normalization and persistence.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace swatnn {

using TaskFunction = std::function<double(double, double)>;

struct Box {
  std::array<double, 2> lo{-1.0, -1.0};
  std::array<double, 2> hi{1.0, 1.0};
};

struct TaskSpec {
  std::string name;
  std::string function;  // registry id
  Box domain;
  int train_count = 3750;
  int test_count = 1250;
  std::uint64_t seed = 0;
};

// x_norm = 2 (x - lo) / (hi - lo) - 1 per input; y_norm = y / output_scale.
struct Normalization {
  Eigen::VectorXd input_lo;
  Eigen::VectorXd input_hi;
  double output_scale = 1.0;

  Eigen::MatrixXd normalize_inputs(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd denormalize_inputs(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd normalize_outputs(const Eigen::MatrixXd& y) const { return y / output_scale; }
  Eigen::MatrixXd denormalize_outputs(const Eigen::MatrixXd& y) const { return y * output_scale; }
};

struct TaskDataset {
  TaskSpec spec;
  Eigen::MatrixXd x_train, y_train, x_test, y_test;  // normalized
  Normalization norm;

  int input_dim() const { return static_cast<int>(x_train.cols()); }
  int output_dim() const { return static_cast<int>(y_train.cols()); }
};

inline constexpr double kOutputMargin = 1e-3;

// Registers (or replaces) a task function under `id`.
void register_task_function(const std::string& id, TaskFunction fn);
bool has_task_function(const std::string& id);
double evaluate_task_function(const std::string& id, double x1, double x2);

// Uniform samples over the domain from independent train/test streams. The
// output scale is max |y| + margin over the samples and the domain corners.
TaskDataset generate(const TaskSpec& spec);

// Constant, linear and twelve standard benchmark functions, in a fixed order.
std::vector<TaskSpec> builtin_suite();
TaskSpec find_task(const std::string& name);

// Dataset built from given arrays with identity normalization.
TaskDataset make_dataset(const std::string& name, Eigen::MatrixXd x_train, Eigen::MatrixXd y_train,
                         Eigen::MatrixXd x_test, Eigen::MatrixXd y_test);

// Columnar binary file plus a JSON sidecar (path with extension .json).
void write_dataset(const std::string& bin_path, const TaskDataset& data);
TaskDataset read_dataset(const std::string& bin_path);
std::string sidecar_path(const std::string& bin_path);

}  // namespace swatnn

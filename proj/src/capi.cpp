#include "swatnn/swatnn.h"

#include "commands.hpp"
#include "swatnn/config.hpp"
#include "swatnn/error.hpp"

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <new>
#include <string>

struct swatnn_mlp {
  swatnn::Mlp value;
};
struct swatnn_model {
  swatnn::AutoencoderModel value;
};
struct swatnn_dataset {
  swatnn::TaskDataset value;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mu;
swatnn_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

swatnn_status status_of(swatnn::ErrorKind k) {
  using swatnn::ErrorKind;
  switch (k) {
    case ErrorKind::Shape: return SWATNN_ERR_SHAPE;
    case ErrorKind::Layout: return SWATNN_ERR_LAYOUT;
    case ErrorKind::Config: return SWATNN_ERR_CONFIG;
    case ErrorKind::Io: return SWATNN_ERR_IO;
    case ErrorKind::Diverged: return SWATNN_ERR_DIVERGED;
    case ErrorKind::NoResult: return SWATNN_ERR_NO_RESULT;
    case ErrorKind::UnknownTask: return SWATNN_ERR_UNKNOWN_TASK;
  }
  return SWATNN_ERR_INTERNAL;
}

template <class Fn>
swatnn_status guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return SWATNN_OK;
  } catch (const swatnn::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return SWATNN_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SWATNN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SWATNN_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SWATNN_ERR_INTERNAL;
  }
}

void check_arg(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

template <class Fn>
swatnn_status call(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return SWATNN_OK;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return SWATNN_ERR_INVALID_ARGUMENT;
  } catch (...) {
    // Rethrown inside guard to classify it.
    return guard([] { throw; });
  }
}

}  // namespace

extern "C" {

const char* swatnn_last_error(void) { return g_last_error.c_str(); }

const char* swatnn_status_name(swatnn_status s) {
  switch (s) {
    case SWATNN_OK: return "ok";
    case SWATNN_ERR_SHAPE: return "shape";
    case SWATNN_ERR_LAYOUT: return "layout";
    case SWATNN_ERR_CONFIG: return "config";
    case SWATNN_ERR_IO: return "io";
    case SWATNN_ERR_DIVERGED: return "diverged";
    case SWATNN_ERR_NO_RESULT: return "no_result";
    case SWATNN_ERR_UNKNOWN_TASK: return "unknown_task";
    case SWATNN_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SWATNN_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* swatnn_version(void) { return "0.1.0"; }

void swatnn_string_free(char* s) { std::free(s); }

void swatnn_set_log_callback(swatnn_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mu);
  g_log_fn = fn;
  g_log_user = user;
}

swatnn_status swatnn_mlp_from_json(const char* json, swatnn_mlp** out) {
  return call([&] {
    check_arg(json != nullptr && out != nullptr, "swatnn_mlp_from_json: null argument");
    *out = nullptr;
    *out = new swatnn_mlp{swatnn::mlp_from_json(swatnn::Json::parse(json))};
  });
}

swatnn_status swatnn_mlp_load(const char* path, swatnn_mlp** out) {
  return call([&] {
    check_arg(path != nullptr && out != nullptr, "swatnn_mlp_load: null argument");
    *out = nullptr;
    *out = new swatnn_mlp{swatnn::load_mlp(path)};
  });
}

swatnn_status swatnn_mlp_to_json(const swatnn_mlp* mlp, char** out) {
  return call([&] {
    check_arg(mlp != nullptr && out != nullptr, "swatnn_mlp_to_json: null argument");
    *out = dup_string(swatnn::mlp_to_json(mlp->value).dump());
  });
}

swatnn_status swatnn_mlp_dims(const swatnn_mlp* mlp, int* input_dim, int* output_dim, int* depth) {
  return call([&] {
    check_arg(mlp != nullptr, "swatnn_mlp_dims: null network");
    if (input_dim) *input_dim = mlp->value.input_dim;
    if (output_dim) *output_dim = mlp->value.output_dim;
    if (depth) *depth = mlp->value.depth();
  });
}

swatnn_status swatnn_mlp_eval(const swatnn_mlp* mlp, const double* xs, size_t rows, int hard, double temperature,
                              double* out) {
  return call([&] {
    check_arg(mlp != nullptr && xs != nullptr && out != nullptr, "swatnn_mlp_eval: null argument");
    const auto& m = mlp->value;
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const swatnn::Matrix x = Eigen::Map<const RowMajor>(xs, static_cast<Eigen::Index>(rows), m.input_dim);
    swatnn::EvalConfig ec;
    ec.mask_mode = hard ? swatnn::MaskMode::Hard : swatnn::MaskMode::Soft;
    ec.temperature = temperature;
    ec.validate();
    const swatnn::Matrix y = swatnn::eval_mlp(m, x, ec);
    Eigen::Map<RowMajor>(out, y.rows(), y.cols()) = y;
  });
}

void swatnn_mlp_free(swatnn_mlp* mlp) { delete mlp; }

swatnn_status swatnn_model_create(const char* config_json, uint64_t seed, swatnn_model** out) {
  return call([&] {
    check_arg(out != nullptr, "swatnn_model_create: null output");
    *out = nullptr;
    const swatnn::AutoencoderConfig cfg = config_json == nullptr || *config_json == '\0'
                                              ? swatnn::AutoencoderConfig{}
                                              : swatnn::autoencoder_config_from_json(swatnn::Json::parse(config_json));
    *out = new swatnn_model{swatnn::AutoencoderModel(cfg, seed)};
  });
}

swatnn_status swatnn_model_load(const char* path, swatnn_model** out) {
  return call([&] {
    check_arg(path != nullptr && out != nullptr, "swatnn_model_load: null argument");
    *out = nullptr;
    *out = new swatnn_model{swatnn::load_checkpoint(std::string(path))};
  });
}

swatnn_status swatnn_model_save(const swatnn_model* model, const char* path) {
  return call([&] {
    check_arg(model != nullptr && path != nullptr, "swatnn_model_save: null argument");
    swatnn::save_checkpoint(std::string(path), model->value);
  });
}

swatnn_status swatnn_model_config(const swatnn_model* model, char** config_json) {
  return call([&] {
    check_arg(model != nullptr && config_json != nullptr, "swatnn_model_config: null argument");
    *config_json = dup_string(swatnn::config_to_json(model->value.config()).dump());
  });
}

swatnn_status swatnn_model_heldout_loss(const swatnn_model* model, uint64_t seed, int count, int inputs_per_mlp,
                                        double* loss) {
  return call([&] {
    check_arg(model != nullptr && loss != nullptr, "swatnn_model_heldout_loss: null argument");
    *loss = swatnn::heldout_loss(model->value, seed, count, inputs_per_mlp);
  });
}

void swatnn_model_free(swatnn_model* model) { delete model; }

swatnn_status swatnn_dataset_generate(const char* task, uint64_t seed, swatnn_dataset** out) {
  return call([&] {
    check_arg(task != nullptr && out != nullptr, "swatnn_dataset_generate: null argument");
    *out = nullptr;
    swatnn::TaskSpec spec = swatnn::find_task(task);
    spec.seed = seed;
    *out = new swatnn_dataset{swatnn::generate(spec)};
  });
}

swatnn_status swatnn_dataset_load(const char* path, swatnn_dataset** out) {
  return call([&] {
    check_arg(path != nullptr && out != nullptr, "swatnn_dataset_load: null argument");
    *out = nullptr;
    *out = new swatnn_dataset{swatnn::read_dataset(path)};
  });
}

swatnn_status swatnn_dataset_save(const swatnn_dataset* data, const char* path) {
  return call([&] {
    check_arg(data != nullptr && path != nullptr, "swatnn_dataset_save: null argument");
    swatnn::write_dataset(path, data->value);
  });
}

swatnn_status swatnn_dataset_info(const swatnn_dataset* data, char** info_json) {
  return call([&] {
    check_arg(data != nullptr && info_json != nullptr, "swatnn_dataset_info: null argument");
    const auto& d = data->value;
    swatnn::Json j = {{"spec", swatnn::task_spec_to_json(d.spec)},
                      {"train_rows", d.x_train.rows()},
                      {"test_rows", d.x_test.rows()},
                      {"input_dim", d.input_dim()},
                      {"output_dim", d.output_dim()},
                      {"output_scale", d.norm.output_scale}};
    *info_json = dup_string(j.dump());
  });
}

void swatnn_dataset_free(swatnn_dataset* data) { delete data; }

swatnn_status swatnn_temperature(long epoch, double t_init, double t_final, int e_anneal, double* out) {
  return call([&] {
    check_arg(out != nullptr, "swatnn_temperature: null output");
    swatnn::AnnealSchedule s{t_init, t_final, e_anneal};
    s.validate();
    *out = swatnn::temperature(epoch, s);
  });
}

swatnn_status swatnn_select_best(const double* mse, const int* nonzeros, const int* diverged, size_t count,
                                 double tolerance, int* selected) {
  return call([&] {
    check_arg(mse != nullptr && nonzeros != nullptr && selected != nullptr, "swatnn_select_best: null argument");
    std::vector<swatnn::Candidate> c(count);
    for (size_t i = 0; i < count; ++i) c[i] = {mse[i], nonzeros[i], diverged != nullptr && diverged[i] != 0};
    *selected = swatnn::select_best(c, tolerance);
  });
}

swatnn_status swatnn_run(const char* command, const char* request_json, char** response_json) {
  return call([&] {
    check_arg(command != nullptr && request_json != nullptr, "swatnn_run: null argument");
    if (response_json) *response_json = nullptr;
    if (!swatnn::cmd::is_command(command)) swatnn::fail(swatnn::ErrorKind::Config, std::string("unknown command '") + command + "'");
    const swatnn::Json req = swatnn::Json::parse(request_json);
    const swatnn::Json resp = swatnn::cmd::run(command, req, [](const std::string& line) {
      std::lock_guard lock(g_log_mu);
      if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
    });
    if (response_json) *response_json = dup_string(resp.dump());
  });
}

}  // extern "C"

/* C interface to the swatnn library. */
#ifndef SWATNN_H
#define SWATNN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define SWATNN_API __attribute__((visibility("default")))
#else
#define SWATNN_API
#endif

typedef enum swatnn_status {
  SWATNN_OK = 0,
  SWATNN_ERR_SHAPE = 1,
  SWATNN_ERR_LAYOUT = 2,
  SWATNN_ERR_CONFIG = 3,
  SWATNN_ERR_IO = 4,
  SWATNN_ERR_DIVERGED = 5,
  SWATNN_ERR_NO_RESULT = 6,
  SWATNN_ERR_UNKNOWN_TASK = 7,
  SWATNN_ERR_INVALID_ARGUMENT = 8,
  SWATNN_ERR_INTERNAL = 9
} swatnn_status;

typedef struct swatnn_mlp swatnn_mlp;
typedef struct swatnn_model swatnn_model;
typedef struct swatnn_dataset swatnn_dataset;

/* Message of the last failure on the calling thread; empty after success. */
SWATNN_API const char* swatnn_last_error(void);
SWATNN_API const char* swatnn_status_name(swatnn_status status);
SWATNN_API const char* swatnn_version(void);

/* Strings returned through char** outputs are released with swatnn_string_free. */
SWATNN_API void swatnn_string_free(char* s);

/* Receives progress lines from long-running calls. Pass NULL to silence. */
typedef void (*swatnn_log_fn)(const char* line, void* user);
SWATNN_API void swatnn_set_log_callback(swatnn_log_fn fn, void* user);

/* Networks */
SWATNN_API swatnn_status swatnn_mlp_from_json(const char* json, swatnn_mlp** out);
SWATNN_API swatnn_status swatnn_mlp_load(const char* path, swatnn_mlp** out);
SWATNN_API swatnn_status swatnn_mlp_to_json(const swatnn_mlp* mlp, char** out);
SWATNN_API swatnn_status swatnn_mlp_dims(const swatnn_mlp* mlp, int* input_dim, int* output_dim, int* depth);
/* xs is row-major rows x input_dim; out receives rows x output_dim, row-major.
   hard != 0 selects binary gates and argmax activations. */
SWATNN_API swatnn_status swatnn_mlp_eval(const swatnn_mlp* mlp, const double* xs, size_t rows, int hard,
                                         double temperature, double* out);
SWATNN_API void swatnn_mlp_free(swatnn_mlp* mlp);

/* Autoencoder checkpoints */
SWATNN_API swatnn_status swatnn_model_create(const char* config_json, uint64_t seed, swatnn_model** out);
SWATNN_API swatnn_status swatnn_model_load(const char* path, swatnn_model** out);
SWATNN_API swatnn_status swatnn_model_save(const swatnn_model* model, const char* path);
SWATNN_API swatnn_status swatnn_model_config(const swatnn_model* model, char** config_json);
/* Mean min-loss over `count` sampled networks. */
SWATNN_API swatnn_status swatnn_model_heldout_loss(const swatnn_model* model, uint64_t seed, int count,
                                                   int inputs_per_mlp, double* loss);
SWATNN_API void swatnn_model_free(swatnn_model* model);

/* Datasets */
SWATNN_API swatnn_status swatnn_dataset_generate(const char* task, uint64_t seed, swatnn_dataset** out);
SWATNN_API swatnn_status swatnn_dataset_load(const char* path, swatnn_dataset** out);
SWATNN_API swatnn_status swatnn_dataset_save(const swatnn_dataset* data, const char* path);
SWATNN_API swatnn_status swatnn_dataset_info(const swatnn_dataset* data, char** info_json);
SWATNN_API void swatnn_dataset_free(swatnn_dataset* data);

/* Small pure operations */
SWATNN_API swatnn_status swatnn_temperature(long epoch, double t_init, double t_final, int e_anneal, double* out);
/* Index (0-based) of the selected candidate. */
SWATNN_API swatnn_status swatnn_select_best(const double* mse, const int* nonzeros, const int* diverged, size_t count,
                                            double tolerance, int* selected);

/* Runs a subcommand described by a JSON request and returns a JSON summary.
   Commands: train-ae, search, baseline, bench-gen, probe-smoothness, compress, report.
   Each command writes its artifacts, resolved-config.json and metrics.jsonl under
   request["out"]. */
SWATNN_API swatnn_status swatnn_run(const char* command, const char* request_json, char** response_json);

#ifdef __cplusplus
}
#endif

#endif

/* Exercises the C interface from plain C, linked against the shared library only. */

#include "swatnn/swatnn.h"

#include <math.h>
#include <stdio.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static const char* kNet =
    "{\"input_dim\":2,\"output_dim\":1,\"layers\":[{\"weights\":[[1.0],[0.0]],\"biases\":[0.0],"
    "\"activations\":[\"tanh\"]}],\"output_weights\":[[2.0]],\"output_biases\":[0.0]}";

static int lines_seen = 0;
static void on_log(const char* line, void* user) {
  (void)line;
  (void)user;
  ++lines_seen;
}

int main(void) {
  EXPECT(strlen(swatnn_version()) > 0);
  EXPECT(strcmp(swatnn_status_name(SWATNN_ERR_NO_RESULT), "no_result") == 0);

  swatnn_mlp* mlp = NULL;
  swatnn_status st = swatnn_mlp_from_json(kNet, &mlp);
  if (st != SWATNN_OK) fprintf(stderr, "mlp_from_json: %s\n", swatnn_last_error());
  EXPECT(st == SWATNN_OK);
  if (mlp) {
    int in = 0, out = 0, depth = 0;
    EXPECT(swatnn_mlp_dims(mlp, &in, &out, &depth) == SWATNN_OK);
    EXPECT(in == 2 && out == 1 && depth == 1);
    const double xs[4] = {0.5, 7.0, -0.5, 1.0};
    double ys[2] = {0, 0};
    EXPECT(swatnn_mlp_eval(mlp, xs, 2, 1, 1.0, ys) == SWATNN_OK);
    EXPECT(fabs(ys[0] - 2.0 * tanh(0.5)) < 1e-15);
    EXPECT(fabs(ys[1] + 2.0 * tanh(0.5)) < 1e-15);
    EXPECT(swatnn_mlp_eval(mlp, xs, 2, 0, 0.0, ys) == SWATNN_ERR_CONFIG);
    char* text = NULL;
    EXPECT(swatnn_mlp_to_json(mlp, &text) == SWATNN_OK);
    EXPECT(text != NULL && strstr(text, "tanh") != NULL);
    swatnn_string_free(text);
    swatnn_mlp_free(mlp);
  }

  EXPECT(swatnn_mlp_from_json("{not json", &mlp) == SWATNN_ERR_CONFIG);
  EXPECT(strlen(swatnn_last_error()) > 0);
  EXPECT(swatnn_mlp_from_json(NULL, &mlp) == SWATNN_ERR_INVALID_ARGUMENT);
  EXPECT(swatnn_mlp_load("/nonexistent/net.json", &mlp) == SWATNN_ERR_IO);

  double t = 0.0;
  EXPECT(swatnn_temperature(1500, 1.0, 0.01, 3000, &t) == SWATNN_OK);
  EXPECT(t == 0.5);
  EXPECT(swatnn_temperature(0, 1.0, 0.01, 0, &t) == SWATNN_ERR_CONFIG);

  const double mse[3] = {1.0, 1.04, 2.0};
  const int nz[3] = {10, 5, 2};
  int sel = -1;
  EXPECT(swatnn_select_best(mse, nz, NULL, 3, 0.05, &sel) == SWATNN_OK);
  EXPECT(sel == 1);
  const int all_div[3] = {1, 1, 1};
  EXPECT(swatnn_select_best(mse, nz, all_div, 3, 0.05, &sel) == SWATNN_ERR_NO_RESULT);

  swatnn_dataset* data = NULL;
  EXPECT(swatnn_dataset_generate("no_such_task", 1, &data) == SWATNN_ERR_UNKNOWN_TASK);
  EXPECT(swatnn_dataset_generate("sphere", 1, &data) == SWATNN_OK);
  if (data) {
    char* info = NULL;
    EXPECT(swatnn_dataset_info(data, &info) == SWATNN_OK);
    EXPECT(info != NULL && strstr(info, "\"train_rows\":3750") != NULL);
    swatnn_string_free(info);
    swatnn_dataset_free(data);
  }

  swatnn_model* model = NULL;
  EXPECT(swatnn_model_create("{\"d_model\":16,\"n_heads\":2,\"n_layers\":1}", 3, &model) == SWATNN_OK);
  EXPECT(swatnn_model_create("{\"d_model\":16,\"bogus\":1}", 3, &model) == SWATNN_ERR_CONFIG);
  if (model) {
    double loss = -1.0;
    EXPECT(swatnn_model_heldout_loss(model, 5, 4, 16, &loss) == SWATNN_OK);
    EXPECT(loss >= 0.0);
    char* cfg = NULL;
    EXPECT(swatnn_model_config(model, &cfg) == SWATNN_OK);
    EXPECT(cfg != NULL && strstr(cfg, "\"d_model\":16") != NULL);
    swatnn_string_free(cfg);
    swatnn_model_free(model);
  }

  swatnn_set_log_callback(on_log, NULL);
  char* resp = NULL;
  EXPECT(swatnn_run("fly", "{}", &resp) == SWATNN_ERR_CONFIG);
  EXPECT(swatnn_run("search", "{\"unknown_key\":1}", &resp) == SWATNN_ERR_CONFIG);
  swatnn_set_log_callback(NULL, NULL);

  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}

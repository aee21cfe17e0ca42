// swatnn command-line entry point. Parses flags, builds a JSON request and hands
// it to the library's C interface.

#include "swatnn/swatnn.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

using nlohmann::json;

int default_threads() {
  if (const char* env = std::getenv("SWATNN_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t >= 1) return t;
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring invalid SWATNN_THREADS='" << env << "'\n";
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

struct Options {
  std::string config, out, ae, task, penalty, precision, method, arch, mlp;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, steps, batches, heldout, decoder, depth, epochs;
  std::optional<double> lr;
  std::vector<int> decoders, cuts, targets;
  std::vector<std::string> inputs;
};

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}
void put(json& j, const char* key, const std::string& v) {
  if (!v.empty()) j[key] = v;
}
template <class T>
void put(json& j, const char* key, const std::vector<T>& v) {
  if (!v.empty()) j[key] = v;
}

json build_request(const std::string& command, const Options& o) {
  json r = json::object();
  put(r, "out", o.out);
  put(r, "config", o.config);
  put(r, "seed", o.seed);
  r["threads"] = o.threads ? *o.threads : default_threads();
  if (command == "train-ae") {
    put(r, "precision", o.precision);
    put(r, "batches", o.batches);
    put(r, "lr", o.lr);
    put(r, "heldout_count", o.heldout);
  } else if (command == "search") {
    put(r, "ae", o.ae);
    put(r, "task", o.task);
    put(r, "penalty", o.penalty);
    put(r, "steps", o.steps);
    put(r, "lr", o.lr);
    put(r, "decoders", o.decoders);
  } else if (command == "baseline") {
    put(r, "method", o.method);
    put(r, "task", o.task);
    put(r, "arch", o.arch);
    put(r, "mlp", o.mlp);
    put(r, "epochs", o.epochs);
  } else if (command == "bench-gen") {
    put(r, "task", o.task);
  } else if (command == "probe-smoothness") {
    put(r, "ae", o.ae);
    put(r, "decoder", o.decoder);
  } else if (command == "compress") {
    put(r, "ae", o.ae);
    put(r, "mlp", o.mlp);
    put(r, "depth", o.depth);
    put(r, "cuts", o.cuts);
    put(r, "targets", o.targets);
    put(r, "steps", o.steps);
  } else if (command == "report") {
    put(r, "inputs", o.inputs);
  }
  return r;
}

void log_line(const char* line, void*) { std::cerr << line << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swatnn: latent-space search over small MLPs"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool with_config = true) {
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--seed", o.seed, "Root random seed");
    sub->add_option("--threads", o.threads, "Worker threads (default: SWATNN_THREADS or core count)")
        ->check(CLI::PositiveNumber);
    if (with_config) sub->add_option("--config", o.config, "Run configuration file (JSON)")->check(CLI::ExistingFile);
  };

  auto* train = app.add_subcommand("train-ae", "Train the autoencoder on sampled networks");
  common(train);
  train->add_option("--precision", o.precision, "Checkpoint storage precision")->check(CLI::IsMember({"f64", "f32"}));
  train->add_option("--batches", o.batches, "Batches per epoch")->check(CLI::PositiveNumber);
  train->add_option("--lr", o.lr, "Learning rate")->check(CLI::PositiveNumber);
  train->add_option("--heldout", o.heldout, "Held-out networks for before/after loss (0 disables)")
      ->check(CLI::NonNegativeNumber);

  auto* search = app.add_subcommand("search", "Search the latent space for a task");
  common(search);
  search->add_option("--ae", o.ae, "Autoencoder checkpoint")->required()->check(CLI::ExistingFile);
  search->add_option("--task", o.task, "Dataset file from bench-gen")->required()->check(CLI::ExistingFile);
  search->add_option("--penalty", o.penalty, "none, small, medium, large or a JSON file");
  search->add_option("--steps", o.steps, "Search steps")->check(CLI::NonNegativeNumber);
  search->add_option("--lr", o.lr, "Search learning rate")->check(CLI::PositiveNumber);
  search->add_option("--decoders", o.decoders, "Decoder indices to search (default: all)")->delimiter(',');

  auto* base = app.add_subcommand("baseline", "Direct training or ADMM pruning");
  common(base);
  base->add_option("method", o.method, "traditional or admm")->required()->check(CLI::IsMember({"traditional", "admm"}));
  base->add_option("--task", o.task, "Dataset file from bench-gen")->required()->check(CLI::ExistingFile);
  base->add_option("--arch", o.arch, "depth,width,activation");
  base->add_option("--mlp", o.mlp, "Network to prune (admm); trained from --arch when absent")->check(CLI::ExistingFile);
  base->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::NonNegativeNumber);

  auto* gen = app.add_subcommand("bench-gen", "Generate benchmark datasets");
  common(gen);
  gen->add_option("--task", o.task, "Task name or 'all'")->required();

  auto* probe = app.add_subcommand("probe-smoothness", "Decode a grid around a random latent point");
  common(probe);
  probe->add_option("--ae", o.ae, "Autoencoder checkpoint")->required()->check(CLI::ExistingFile);
  probe->add_option("--decoder", o.decoder, "Decoder index")->check(CLI::PositiveNumber);

  auto* comp = app.add_subcommand("compress", "Compress a deep network part by part");
  common(comp);
  comp->add_option("--ae", o.ae, "Autoencoder checkpoint")->required()->check(CLI::ExistingFile);
  comp->add_option("--mlp", o.mlp, "Deep network JSON (default: random)")->check(CLI::ExistingFile);
  comp->add_option("--depth", o.depth, "Depth of the random deep network")->check(CLI::PositiveNumber);
  comp->add_option("--cuts", o.cuts, "Cut layers, e.g. 4 or 3,6")->delimiter(',');
  comp->add_option("--targets", o.targets, "Target depth per part")->delimiter(',');
  comp->add_option("--steps", o.steps, "Search steps per part")->check(CLI::NonNegativeNumber);

  auto* rep = app.add_subcommand("report", "Aggregate result files into CSV tables");
  rep->add_option("--out", o.out, "Output directory")->required();
  rep->add_option("inputs", o.inputs, "result.json files or directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::string command;
  for (auto* sub : app.get_subcommands()) command = sub->get_name();

  if (command == "baseline" && o.method == "traditional" && o.arch.empty()) {
    std::cerr << "baseline traditional: --arch is required\n";
    return 2;
  }

  swatnn_set_log_callback(log_line, nullptr);
  const std::string request = build_request(command, o).dump();
  char* response = nullptr;
  const swatnn_status st = swatnn_run(command.c_str(), request.c_str(), &response);
  if (st != SWATNN_OK) {
    json err = {{"error", {{"command", command}, {"status", swatnn_status_name(st)}, {"message", swatnn_last_error()}}}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
  std::cout << (response ? response : "{}") << '\n';
  swatnn_string_free(response);
  return 0;
}

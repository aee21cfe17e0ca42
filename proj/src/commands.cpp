#include "commands.hpp"

#include "swatnn/error.hpp"
#include "swatnn/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace swatnn::cmd {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& ctx) {
  require(j.is_object(), ErrorKind::Config, ctx + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    require(allowed.count(k) > 0, ErrorKind::Config, "unknown key '" + ctx + "." + k + "'");
}

template <class T>
T get_or(const Json& j, const std::string& key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, "request." + key + ": " + e.what());
  }
}

std::string need_string(const Json& j, const std::string& key) {
  const std::string v = get_or<std::string>(j, key, "");
  require(!v.empty(), ErrorKind::Config, "missing required option '" + key + "'");
  return v;
}

// Run-configuration file with one tree per module.
struct RunFile {
  Json root = Json::object();
  const Json* tree(const std::string& key) const {
    auto it = root.find(key);
    return it == root.end() ? nullptr : &*it;
  }
};

RunFile load_run_file(const Json& request) {
  RunFile rf;
  const std::string path = get_or<std::string>(request, "config", "");
  if (path.empty()) return rf;
  rf.root = read_json_file(path);
  check_keys(rf.root,
             {"seed", "threads", "precision", "autoencoder", "train", "search", "baseline", "bench", "smoothness",
              "compress"},
             "config");
  // Parse every tree so mistakes surface whichever command runs.
  if (auto* t = rf.tree("autoencoder")) autoencoder_config_from_json(*t);
  if (auto* t = rf.tree("train")) train_spec_from_json(*t);
  if (auto* t = rf.tree("search")) search_config_from_json(*t);
  if (auto* t = rf.tree("smoothness")) smoothness_config_from_json(*t);
  if (auto* t = rf.tree("compress")) compress_config_from_json(*t);
  if (auto* t = rf.tree("baseline")) {
    check_keys(*t, {"traditional", "admm", "arch"}, "config.baseline");
    if (t->contains("traditional")) traditional_config_from_json(t->at("traditional"));
    if (t->contains("admm")) admm_config_from_json(t->at("admm"));
  }
  if (auto* t = rf.tree("bench")) check_keys(*t, {"train_count", "test_count"}, "config.bench");
  return rf;
}

std::uint64_t resolve_seed(const Json& request, const RunFile& rf, std::uint64_t fallback) {
  if (request.contains("seed") && !request["seed"].is_null()) return get_or<std::uint64_t>(request, "seed", fallback);
  if (auto* s = rf.tree("seed")) return s->get<std::uint64_t>();
  return fallback;
}

int resolve_threads(const Json& request, const RunFile& rf, int fallback) {
  int t = fallback;
  if (auto* s = rf.tree("threads")) t = s->get<int>();
  t = get_or<int>(request, "threads", t);
  require(t >= 1, ErrorKind::Config, "threads must be >= 1");
  return t;
}

fs::path prepare_out(const Json& request) {
  const fs::path out = need_string(request, "out");
  std::error_code ec;
  fs::create_directories(out, ec);
  require(!ec && fs::is_directory(out), ErrorKind::Io, "cannot create output directory " + out.string());
  return out;
}

class Metrics {
 public:
  explicit Metrics(const fs::path& dir) : out_(dir / "metrics.jsonl") {
    require(static_cast<bool>(out_), ErrorKind::Io, "cannot write metrics.jsonl in " + dir.string());
  }
  void write(const Json& record) { out_ << record.dump() << "\n" << std::flush; }

 private:
  std::ofstream out_;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

AutoencoderModel load_model(const std::string& path) {
  require(fs::exists(path), ErrorKind::Io, "autoencoder checkpoint not found: " + path);
  return load_checkpoint(path);
}

// ---------------------------------------------------------------------------

Json train_ae(const Json& req, const Logger& log) {
  check_keys(req, {"out", "config", "seed", "threads", "precision", "heldout_count", "batches", "lr"}, "request");
  const RunFile rf = load_run_file(req);
  AutoencoderConfig ac = rf.tree("autoencoder") ? autoencoder_config_from_json(*rf.tree("autoencoder")) : AutoencoderConfig{};
  TrainSpec ts = rf.tree("train") ? train_spec_from_json(*rf.tree("train")) : TrainSpec{};
  ts.seed = resolve_seed(req, rf, ts.seed);
  ts.threads = resolve_threads(req, rf, ts.threads);
  ts.batches_per_epoch = get_or<int>(req, "batches", ts.batches_per_epoch);
  ts.lr = get_or<double>(req, "lr", ts.lr);
  std::string precision = get_or<std::string>(req, "precision", "");
  if (precision.empty())
    if (auto* p = rf.tree("precision")) precision = p->get<std::string>();
  if (!precision.empty()) {
    Json j = config_to_json(ac);
    j["precision"] = precision;
    ac = autoencoder_config_from_json(j);
  }
  const int heldout = get_or<int>(req, "heldout_count", 64);
  require(heldout >= 0, ErrorKind::Config, "heldout_count must be >= 0");
  const fs::path out = prepare_out(req);

  Json resolved = {{"command", "train-ae"},
                   {"seed", ts.seed},
                   {"threads", ts.threads},
                   {"autoencoder", config_to_json(ac)},
                   {"train", train_spec_to_json(ts)},
                   {"heldout_count", heldout}};
  write_json_file((out / "resolved-config.json").string(), resolved);
  Metrics metrics(out);

  AutoencoderModel model(ac, derive_seed(ts.seed, "ae-model"));
  const std::uint64_t heldout_seed = derive_seed(ts.seed, "heldout");
  double before = std::nan("");
  if (heldout > 0) {
    before = heldout_loss(model, heldout_seed, heldout, ts.inputs_per_mlp, ts.sample);
    log("held-out loss (untrained): " + fmt(before));
  }
  log("training " + std::to_string(model.parameter_count()) + " parameters for " + std::to_string(ts.epochs) + " x " +
      std::to_string(ts.batches_per_epoch) + " batches");

  std::ofstream losses(out / "batch-losses.csv");
  losses << "batch,loss\n" << std::setprecision(17);
  TrainHooks hooks;
  hooks.on_batch = [&](long b, double l) {
    losses << b << ',' << l << '\n';
    if ((b + 1) % 100 == 0) log("batch " + std::to_string(b + 1) + " loss " + fmt(l));
  };
  hooks.on_epoch = [&](const EpochRecord& e) {
    metrics.write({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"per_decoder_win_rate", e.per_decoder_win_rate}});
  };
  hooks.on_checkpoint = [&](const AutoencoderModel& m, long b, const std::string& reason) {
    fs::path p = reason == "final"      ? out / "checkpoint.swnn"
                 : reason == "diverged" ? out / ("diverged-b" + std::to_string(b) + ".swnn")
                                        : out / ("checkpoint-b" + std::to_string(b + 1) + ".swnn");
    save_checkpoint(p.string(), m);
    if (reason != "periodic") log("wrote " + p.string());
  };
  const TrainMetrics tm = train_autoencoder(model, ts, hooks);
  losses.close();

  Json summary = {{"checkpoint", (out / "checkpoint.swnn").string()},
                  {"parameters", model.parameter_count()},
                  {"batches", tm.batch_losses.size()},
                  {"final_batch_loss", tm.batch_losses.empty() ? Json(nullptr) : Json(tm.batch_losses.back())},
                  {"divergence_warnings", tm.divergence_warnings}};
  if (heldout > 0) {
    const double after = heldout_loss(model, heldout_seed, heldout, ts.inputs_per_mlp, ts.sample);
    log("held-out loss (trained): " + fmt(after));
    summary["heldout_untrained"] = before;
    summary["heldout_trained"] = after;
    summary["heldout_ratio"] = after / before;
  }
  write_json_file((out / "summary.json").string(), summary);
  return summary;
}

// ---------------------------------------------------------------------------

PenaltyConfig resolve_penalty(const std::string& spec, PenaltyConfig fallback) {
  if (spec.empty()) return fallback;
  if (spec == "none" || spec == "small" || spec == "medium" || spec == "large")
    return penalty_preset(penalty_level_from_name(spec));
  require(fs::exists(spec), ErrorKind::Config,
          "penalty must be none, small, medium, large or a JSON file; '" + spec + "' is neither");
  return penalty_from_json(read_json_file(spec));
}

void write_trajectories(const fs::path& path, const std::vector<std::pair<std::string, const std::vector<double>*>>& runs) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << "run,step,loss\n" << std::setprecision(17);
  for (const auto& [label, traj] : runs)
    for (std::size_t s = 0; s < traj->size(); ++s) out << label << ',' << s << ',' << (*traj)[s] << '\n';
}

Json search(const Json& req, const Logger& log) {
  check_keys(req, {"ae", "task", "penalty", "seed", "threads", "out", "config", "steps", "lr", "decoders"}, "request");
  const std::string ae = need_string(req, "ae");
  const std::string task = need_string(req, "task");
  const RunFile rf = load_run_file(req);
  SearchConfig sc = rf.tree("search") ? search_config_from_json(*rf.tree("search")) : SearchConfig{};
  sc.seed = resolve_seed(req, rf, sc.seed);
  sc.threads = resolve_threads(req, rf, sc.threads);
  sc.steps = get_or<int>(req, "steps", sc.steps);
  sc.lr = get_or<double>(req, "lr", sc.lr);
  sc.decoder_set = get_or<std::vector<int>>(req, "decoders", sc.decoder_set);
  sc.penalties = resolve_penalty(get_or<std::string>(req, "penalty", ""), sc.penalties);
  const fs::path out = prepare_out(req);

  const AutoencoderModel model = load_model(ae);
  const TaskDataset data = read_dataset(task);
  sc.validate(model.config().decoders());
  write_json_file((out / "resolved-config.json").string(), {{"command", "search"},
                                                            {"ae", ae},
                                                            {"task", task},
                                                            {"seed", sc.seed},
                                                            {"threads", sc.threads},
                                                            {"search", search_config_to_json(sc)}});
  Metrics metrics(out);
  log("searching task '" + data.spec.name + "' over decoders " + Json(sc.decoders(model.config().decoders())).dump());
  const SearchResult res = run_search(model, data, sc);

  std::vector<std::pair<std::string, const std::vector<double>*>> trajs;
  for (const auto& r : res.per_decoder) {
    metrics.write({{"decoder", r.decoder},
                   {"steps_run", r.steps_run},
                   {"final_loss", r.trajectory.empty() ? Json(nullptr) : Json(r.trajectory.back())},
                   {"train_mse", r.train_mse},
                   {"test_mse", r.test_mse},
                   {"nonzeros", r.nonzeros},
                   {"active_neurons", r.active_neurons},
                   {"diverged", r.diverged}});
    save_mlp((out / ("mlp-decoder" + std::to_string(r.decoder) + ".json")).string(), r.mlp);
    trajs.emplace_back("decoder" + std::to_string(r.decoder), &r.trajectory);
    log("decoder " + std::to_string(r.decoder) + ": test mse " + fmt(r.test_mse) + ", nonzeros " +
        std::to_string(r.nonzeros) + (r.diverged ? " (diverged)" : ""));
  }
  write_trajectories(out / "trajectory.csv", trajs);
  Json result = search_result_to_json(res, data.spec.name);
  result["penalties"] = penalty_to_json(sc.penalties);
  write_json_file((out / "result.json").string(), result);
  require(res.selected >= 0, ErrorKind::NoResult, "search: every decoder diverged");
  const auto& best = res.per_decoder[static_cast<std::size_t>(res.selected)];
  save_mlp((out / "mlp.json").string(), best.mlp);
  return {{"task", data.spec.name},
          {"selected_decoder", best.decoder},
          {"test_mse", best.test_mse},
          {"train_mse", best.train_mse},
          {"nonzeros", best.nonzeros},
          {"result", (out / "result.json").string()}};
}

// ---------------------------------------------------------------------------

Json baseline(const Json& req, const Logger& log) {
  check_keys(req, {"method", "task", "arch", "mlp", "out", "seed", "threads", "config", "epochs"}, "request");
  const std::string method = need_string(req, "method");
  require(method == "traditional" || method == "admm", ErrorKind::Config,
          "baseline method must be 'traditional' or 'admm', got '" + method + "'");
  const std::string task = need_string(req, "task");
  const RunFile rf = load_run_file(req);
  const Json* bt = rf.tree("baseline");
  TraditionalConfig tc = bt && bt->contains("traditional") ? traditional_config_from_json(bt->at("traditional"))
                                                           : TraditionalConfig{};
  AdmmConfig acfg = bt && bt->contains("admm") ? admm_config_from_json(bt->at("admm")) : AdmmConfig{};
  tc.seed = resolve_seed(req, rf, tc.seed);
  tc.epochs = get_or<int>(req, "epochs", tc.epochs);
  std::string arch_text = bt && bt->contains("arch") ? bt->at("arch").get<std::string>() : std::string();
  arch_text = get_or<std::string>(req, "arch", arch_text);
  const std::string mlp_path = get_or<std::string>(req, "mlp", "");
  require(!arch_text.empty() || (method == "admm" && !mlp_path.empty()), ErrorKind::Config,
          "missing required option 'arch'");
  const fs::path out = prepare_out(req);
  const TaskDataset data = read_dataset(task);

  Json resolved = {{"command", "baseline"}, {"method", method}, {"task", task}, {"seed", tc.seed},
                   {"traditional", traditional_config_to_json(tc)}};
  if (!arch_text.empty()) resolved["arch"] = format_architecture(parse_architecture(arch_text));
  if (method == "admm") resolved["admm"] = admm_config_to_json(acfg);
  if (!mlp_path.empty()) resolved["mlp"] = mlp_path;
  write_json_file((out / "resolved-config.json").string(), resolved);
  Metrics metrics(out);

  BaselineResult r;
  std::string label;
  if (method == "traditional" || mlp_path.empty()) {
    const Architecture arch = parse_architecture(arch_text);
    log("training " + format_architecture(arch) + " on '" + data.spec.name + "' for " + std::to_string(tc.epochs) +
        " epochs");
    r = train_traditional(arch, data, tc);
    label = format_architecture(arch);
    metrics.write({{"stage", "traditional"}, {"train_mse", r.train_mse}, {"test_mse", r.test_mse},
                   {"nonzeros", r.nonzeros}, {"diverged", r.diverged}});
  }
  if (method == "admm") {
    const Mlp input = mlp_path.empty() ? r.mlp : load_mlp(mlp_path);
    if (label.empty()) label = "mlp";
    log("ADMM pruning with rho " + fmt(acfg.rho) + ", threshold " + fmt(acfg.threshold));
    r = admm_prune(input, data, acfg);
    label += " admm";
    metrics.write({{"stage", "admm"}, {"train_mse", r.train_mse}, {"test_mse", r.test_mse}, {"nonzeros", r.nonzeros},
                   {"nonzeros_before", r.nonzeros_before}, {"test_mse_before", r.test_mse_before},
                   {"diverged", r.diverged}});
  }
  write_trajectories(out / "trajectory.csv", {{method, &r.trajectory}});
  save_mlp((out / "mlp.json").string(), r.mlp);
  Json result = {{"kind", method}, {"task", data.spec.name}, {"runs", Json::array({baseline_result_to_json(r, label)})},
                 {"selected", r.diverged ? -1 : 0}};
  write_json_file((out / "result.json").string(), result);
  log("test mse " + fmt(r.test_mse) + ", nonzeros " + std::to_string(r.nonzeros));
  return {{"task", data.spec.name}, {"method", method}, {"test_mse", r.test_mse}, {"train_mse", r.train_mse},
          {"nonzeros", r.nonzeros}, {"diverged", r.diverged}, {"result", (out / "result.json").string()}};
}

// ---------------------------------------------------------------------------

Json bench_gen(const Json& req, const Logger& log) {
  check_keys(req, {"task", "out", "seed", "config", "threads"}, "request");
  const std::string which = need_string(req, "task");
  const RunFile rf = load_run_file(req);
  const bool seeded = req.contains("seed") || rf.tree("seed") != nullptr;
  const std::uint64_t seed = resolve_seed(req, rf, 0);
  std::vector<TaskSpec> specs;
  if (which == "all") {
    specs = builtin_suite();
  } else {
    specs.push_back(find_task(which));
  }
  const Json* bt = rf.tree("bench");
  for (auto& s : specs) {
    if (seeded) s.seed = derive_seed(seed, s.name);
    if (bt) {
      s.train_count = get_or<int>(*bt, "train_count", s.train_count);
      s.test_count = get_or<int>(*bt, "test_count", s.test_count);
    }
  }
  const fs::path out = prepare_out(req);
  Json resolved = {{"command", "bench-gen"}, {"task", which}, {"tasks", Json::array()}};
  if (seeded) resolved["seed"] = seed;
  for (const auto& s : specs) resolved["tasks"].push_back(task_spec_to_json(s));
  write_json_file((out / "resolved-config.json").string(), resolved);
  Metrics metrics(out);
  Json files = Json::array();
  for (const auto& s : specs) {
    const TaskDataset d = generate(s);
    const fs::path p = out / (s.name + ".bin");
    write_dataset(p.string(), d);
    metrics.write({{"task", s.name}, {"train_count", s.train_count}, {"test_count", s.test_count},
                   {"output_scale", d.norm.output_scale}, {"file", p.string()}});
    log("wrote " + p.string());
    files.push_back(p.string());
  }
  return {{"files", files}};
}

// ---------------------------------------------------------------------------

Json probe_smoothness(const Json& req, const Logger& log) {
  check_keys(req, {"ae", "decoder", "out", "seed", "threads", "config"}, "request");
  const std::string ae = need_string(req, "ae");
  const RunFile rf = load_run_file(req);
  SmoothnessConfig cfg = rf.tree("smoothness") ? smoothness_config_from_json(*rf.tree("smoothness")) : SmoothnessConfig{};
  cfg.seed = resolve_seed(req, rf, cfg.seed);
  cfg.threads = resolve_threads(req, rf, cfg.threads);
  const int decoder = get_or<int>(req, "decoder", 1);
  const fs::path out = prepare_out(req);
  const AutoencoderModel model = load_model(ae);
  write_json_file((out / "resolved-config.json").string(), {{"command", "probe-smoothness"},
                                                            {"ae", ae},
                                                            {"decoder", decoder},
                                                            {"smoothness", smoothness_config_to_json(cfg)}});
  Metrics metrics(out);
  log("probing decoder " + std::to_string(decoder));
  const SmoothnessGrid g = smoothness_probe(model, decoder, cfg);

  std::ofstream csv(out / "grid.csv");
  require(static_cast<bool>(csv), ErrorKind::Io, "cannot write grid.csv");
  csv << "alpha,beta,mse\n" << std::setprecision(17);
  for (std::size_t i = 0; i < g.alphas.size(); ++i)
    for (std::size_t j = 0; j < g.betas.size(); ++j)
      csv << g.alphas[i] << ',' << g.betas[j] << ',' << g.mse(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
          << '\n';
  const auto ci = static_cast<Eigen::Index>(std::find(g.alphas.begin(), g.alphas.end(), 0.0) - g.alphas.begin());
  const bool has_origin = ci < static_cast<Eigen::Index>(g.alphas.size());
  Json summary = {{"grid", (out / "grid.csv").string()},
                  {"cells", g.mse.size()},
                  {"all_finite", g.mse.allFinite()},
                  {"max_mse", g.mse.maxCoeff()},
                  {"mean_mse", g.mse.mean()},
                  {"origin_mse", has_origin ? Json(g.mse(ci, ci)) : Json(nullptr)},
                  {"v1_dot_v2", g.v1.dot(g.v2)},
                  {"rank_deficient", g.rank_deficient}};
  metrics.write(summary);
  write_json_file((out / "probe.json").string(), summary);
  return summary;
}

// ---------------------------------------------------------------------------

Json compress_cmd(const Json& req, const Logger& log) {
  check_keys(req, {"ae", "mlp", "depth", "cuts", "targets", "out", "seed", "threads", "config", "steps"}, "request");
  const std::string ae = need_string(req, "ae");
  const RunFile rf = load_run_file(req);
  CompressConfig cfg = rf.tree("compress") ? compress_config_from_json(*rf.tree("compress")) : CompressConfig{};
  cfg.seed = resolve_seed(req, rf, cfg.seed);
  cfg.search.seed = cfg.seed;
  cfg.search.threads = resolve_threads(req, rf, cfg.search.threads);
  cfg.search.steps = get_or<int>(req, "steps", cfg.search.steps);
  const AutoencoderModel model = load_model(ae);
  const auto& layout = model.config().layout;

  const std::string mlp_path = get_or<std::string>(req, "mlp", "");
  const Mlp deep = mlp_path.empty()
                       ? sample_deep_mlp(derive_seed(cfg.seed, "deep"), get_or<int>(req, "depth", 9),
                                         {2, std::min(layout.max_neurons, layout.input_dim_max)}, 2, 1)
                       : load_mlp(mlp_path);
  cfg.cuts = get_or<std::vector<int>>(req, "cuts", cfg.cuts);
  if (cfg.cuts.empty()) cfg.cuts = {std::max(1, deep.depth() / 2)};
  cfg.target_depths = get_or<std::vector<int>>(req, "targets", cfg.target_depths);
  if (cfg.target_depths.empty()) cfg.target_depths.assign(cfg.cuts.size() + 1, layout.max_hidden_layers);
  const fs::path out = prepare_out(req);
  save_mlp((out / "deep.json").string(), deep);
  write_json_file((out / "resolved-config.json").string(),
                  {{"command", "compress"}, {"ae", ae}, {"mlp", mlp_path.empty() ? Json(nullptr) : Json(mlp_path)},
                   {"deep_depth", deep.depth()}, {"compress", compress_config_to_json(cfg)}});
  Metrics metrics(out);
  log("compressing a " + std::to_string(deep.depth()) + "-hidden-layer network at cuts " + Json(cfg.cuts).dump() +
      " to depths " + Json(cfg.target_depths).dump());
  const CompressReport rep = compress(deep, model, cfg);

  std::vector<std::pair<std::string, const std::vector<double>*>> trajs;
  Json parts = Json::array();
  for (const auto& p : rep.parts) {
    Json pj = {{"part", p.index},         {"original_depth", p.original_depth}, {"target_depth", p.target_depth},
               {"input_dim", p.input_dim}, {"output_dim", p.output_dim},        {"search_train_mse", p.search_train_mse},
               {"search_test_mse", p.search_test_mse}, {"teacher_mse", p.teacher_mse}, {"nonzeros", p.nonzeros},
               {"compressed_depth", p.compressed.depth()}};
    metrics.write(pj);
    parts.push_back(pj);
    trajs.emplace_back("part" + std::to_string(p.index), &p.trajectory);
  }
  write_trajectories(out / "trajectory.csv", trajs);
  save_mlp((out / "compressed.json").string(), rep.compressed);
  Json report = {{"original_depth", rep.original_depth},
                 {"compressed_depth", rep.compressed_depth},
                 {"original_nonzeros", rep.original_nonzeros},
                 {"compressed_nonzeros", rep.compressed_nonzeros},
                 {"output_mse", rep.output_mse},
                 {"relative_output_mse", rep.relative_output_mse},
                 {"interface_mse", rep.interface_mse},
                 {"parts", parts}};
  write_json_file((out / "report.json").string(), report);
  log("output mse " + fmt(rep.output_mse) + " (relative " + fmt(rep.relative_output_mse) + ")");
  return report;
}

// ---------------------------------------------------------------------------

Json report_cmd(const Json& req, const Logger& log) {
  check_keys(req, {"inputs", "out", "threads", "config", "seed"}, "request");
  const auto inputs = get_or<std::vector<std::string>>(req, "inputs", {});
  require(!inputs.empty(), ErrorKind::Config, "missing required option 'inputs'");
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& e : fs::recursive_directory_iterator(in))
        if (e.is_regular_file() && e.path().filename() == "result.json") found.push_back(e.path().string());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      require(fs::exists(in), ErrorKind::Io, "report input not found: " + in);
      files.push_back(in);
    }
  }
  require(!files.empty(), ErrorKind::NoResult, "report: no result.json files found");
  const fs::path out = prepare_out(req);
  write_json_file((out / "resolved-config.json").string(), {{"command", "report"}, {"inputs", inputs}, {"files", files}});
  Metrics metrics(out);
  write_report(files, out.string());
  metrics.write({{"files", files.size()}});
  log("aggregated " + std::to_string(files.size()) + " result files");
  return {{"files", files.size()},
          {"summary", (out / "summary.csv").string()},
          {"best", (out / "best.csv").string()},
          {"pareto", (out / "pareto.csv").string()}};
}

}  // namespace

bool is_command(const std::string& name) {
  static const std::set<std::string> names = {"train-ae", "search", "baseline", "bench-gen", "probe-smoothness",
                                              "compress", "report"};
  return names.count(name) > 0;
}

Json run(const std::string& name, const Json& request, const Logger& log) {
  const Logger sink = log ? log : [](const std::string&) {};
  if (name == "train-ae") return train_ae(request, sink);
  if (name == "search") return search(request, sink);
  if (name == "baseline") return baseline(request, sink);
  if (name == "bench-gen") return bench_gen(request, sink);
  if (name == "probe-smoothness") return probe_smoothness(request, sink);
  if (name == "compress") return compress_cmd(request, sink);
  if (name == "report") return report_cmd(request, sink);
  fail(ErrorKind::Config, "unknown command '" + name + "'");
}

}  // namespace swatnn::cmd

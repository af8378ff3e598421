#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stgin/checkpoint.hpp"
#include "stgin/cli.hpp"
#include "stgin/csv.hpp"
#include "stgin/errors.hpp"
#include "stgin/evaluate.hpp"
#include "stgin/log.hpp"

namespace stgin::cli {

namespace fs = std::filesystem;

namespace {

std::string num(std::size_t v) { return std::to_string(v); }

fs::path existing(const RunConfig& c, const std::string& key) {
  const fs::path p = c.path(key);
  if (p.empty()) throw ConfigError(key + " is required");
  if (!fs::exists(p)) throw ConfigError(key + " path does not exist: " + p.string());
  return p;
}

fs::path out_dir(const RunConfig& c) {
  const fs::path dir = c.path("out_dir");
  if (dir.empty()) throw ConfigError("out_dir is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

void write_echo(const RunConfig& c, const fs::path& dir, const std::string& command) {
  write_text(dir / (command + ".conf"), "# stgin " + command + "\n" + c.echo());
}

struct Prepared {
  RoadGraph graph;
  NormStats stats;
  WindowSplit split;
  Tensor train_rows;  // normalized rows before the cut
};

// Loads speeds and graph, cleans gaps, normalizes with training-side
// statistics (or `fixed` when given) and splits the windows.
Prepared prepare(const RunConfig& c, const NormStats* fixed) {
  SpeedDataset ds = load_speed_csv(existing(c, "speeds"));
  ds.step_minutes = c.real("step_minutes");
  if (const std::size_t missing = count_missing(ds.matrix); missing > 0) {
    log_warning(num(missing) + " missing readings filled by interpolation");
    ds = interpolate_missing(ds);
  }
  Prepared p;
  p.graph = graph_from_config(c);
  if (p.graph.n_nodes != ds.matrix.cols()) {
    throw DataError("graph has " + num(p.graph.n_nodes) + " nodes but speeds have " +
                    num(ds.matrix.cols()) + " columns");
  }
  const std::size_t e = c.size("input_len"), f = c.size("horizon");
  const double ratio = c.real("train_ratio");
  const std::size_t cut = split_step(window_count(ds.matrix.rows(), e, f), ratio);
  p.stats = fixed ? *fixed : fit_normalization(ds.matrix, cut);
  const Tensor norm = normalize(ds.matrix, p.stats);
  p.split = split_chronological(sliding_windows(norm, e, f), ratio);
  const std::size_t n = norm.cols();
  p.train_rows = Tensor({cut, n});
  std::copy(norm.storage().begin(), norm.storage().begin() + static_cast<long>(cut * n),
            p.train_rows.storage().begin());
  return p;
}

}  // namespace

RoadGraph graph_from_config(const RunConfig& c) {
  if (!c.path("adjacency").empty()) return load_prebuilt_adjacency(existing(c, "adjacency"));
  if (c.path("distances").empty()) throw ConfigError("either adjacency or distances is required");
  const Tensor d = load_distances(existing(c, "distances"));
  const double sigma = c.text("sigma") == "auto" ? sigma_from_distances(d) : c.real("sigma");
  if (c.text("sigma") == "auto" && !(sigma > 0.0)) {
    throw ConfigError("sigma = auto gives 0 because all distances are equal; set sigma");
  }
  const double kappa = c.text("kappa") == "auto"
                           ? kappa_from_percentile(d, c.real("kappa_percentile"))
                           : c.real("kappa");
  return build_adjacency(d, sigma, kappa);
}

void cmd_build_graph(const RunConfig& c) {
  existing(c, "distances");
  const fs::path dir = out_dir(c);
  RunConfig from_distances = c;
  from_distances.set("adjacency", "");
  const RoadGraph g = graph_from_config(from_distances);
  save_adjacency(dir / "adjacency.csv", g);
  std::ostringstream summary;
  summary << "nodes = " << g.n_nodes << "\nedges = " << g.edge_count()
          << "\nsigma = " << csv::format_double(g.sigma)
          << "\nkappa = " << csv::format_double(g.kappa) << '\n';
  write_text(dir / "graph_summary.txt", summary.str());
  write_echo(c, dir, "build-graph");
  log_info("graph: " + num(g.n_nodes) + " nodes, " + num(g.edge_count()) + " edges");
}

void cmd_synth(const RunConfig& c) {
  const SynthConfig sc = synth_from(c);
  sc.validate();
  const fs::path dir = out_dir(c);
  write_synth(dir, sc, synthesize(sc));
  write_echo(c, dir, "synth");
  log_info("synth: wrote " + (dir / "speeds.csv").string());
}

void cmd_train(const RunConfig& c) {
  const TrainConfig tc = train_from(c);
  tc.validate();
  dims_from(c, 1);  // malformed values fail before any file is read
  const Prepared p = prepare(c, nullptr);
  const StginDims dims = dims_from(c, p.graph.n_nodes);
  dims.validate();
  if (p.split.train.empty()) throw DataError("no training windows; series too short");
  const fs::path dir = out_dir(c);
  write_echo(c, dir, "train");

  StginModel model = init_params(dims, tc.seed);
  const std::size_t every = c.size("log_every");
  const std::size_t total = planned_updates(tc, p.split.train.size());
  log_info("train: " + num(p.split.train.size()) + " windows, " + num(total) + " updates");
  std::vector<double> trace;
  try {
    trace = train(model, p.split.train, p.graph, tc, [&](std::size_t u, double loss) {
      if (every > 0 && (u % every == 0 || u == 1)) {
        log_info("update " + num(u) + "/" + num(total) + " loss " + csv::format_double(loss));
      }
    });
  } catch (const TrainingError&) {
    save_checkpoint(dir / "checkpoint_last_finite.json", model, p.stats);
    throw;
  }
  save_checkpoint(dir / "checkpoint.json", model, p.stats);
  write_loss_csv(dir / "loss.csv", trace);
  log_info("train: final loss " + csv::format_double(trace.back()));
}

void cmd_evaluate(const RunConfig& c) {
  const fs::path dir = out_dir(c);
  const fs::path ck_path =
      c.path("checkpoint").empty() ? dir / "checkpoint.json" : existing(c, "checkpoint");
  if (!fs::exists(ck_path)) throw ConfigError("checkpoint not found: " + ck_path.string());
  const Checkpoint ck = load_checkpoint(ck_path);
  const Prepared p = prepare(c, &ck.norm);
  const auto diff = dims_mismatch(dims_from(c, p.graph.n_nodes), ck.model.dims);
  if (!diff.empty()) {
    std::string names;
    for (const auto& d : diff) names += (names.empty() ? "" : ", ") + d;
    throw CheckpointError("checkpoint dims differ from the configuration in: " + names);
  }
  const auto nodes = c.size_list("plot_nodes");
  for (std::size_t a : nodes) {
    if (a >= p.graph.n_nodes) {
      throw ParameterError("plot node " + num(a) + " out of range for " + num(p.graph.n_nodes) +
                           " nodes");
    }
  }
  if (p.split.test.empty()) throw DataError("no test windows; series too short");

  const LinearAr ar = fit_linear_ar(p.train_rows, c.size("ar_order"));
  std::vector<NamedForecaster> methods{{"stgin", stgin_forecaster(ck.model, p.graph)}};
  for (auto& b : baseline_forecasters(ck.model.dims.horizon, &ar)) methods.push_back(std::move(b));
  const auto forecasts = forecast_all(methods, p.split.test, c.flag("parallel"));
  EvalReport report = evaluate_forecasts(methods, forecasts, p.split.test, ck.norm,
                                         ck.model.dims.step_minutes, c.text("dataset"));
  if (fs::exists(dir / "loss.csv")) report.loss_trace = read_loss_csv(dir / "loss.csv");

  write_report_csv(dir / "report.csv", report);
  write_report_log(dir / "report.log", report);
  write_node_predictions(dir, nodes, forecasts.front(), p.split.test, ck.norm,
                         ck.model.dims.input_len, ck.model.dims.step_minutes);
  write_echo(c, dir, "evaluate");
  for (const MetricRow& r : report.rows) {
    if (r.scale != "normalized") continue;
    log_info(csv::format_double(r.horizon_min) + " min " + r.method + ": accuracy " +
             csv::format_double(r.accuracy) + ", rmse " + csv::format_double(r.rmse));
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const ContractError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e)) {
    return 2;
  }
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const CheckpointError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) {
    return 3;
  }
  if (dynamic_cast<const TrainingError*>(&e)) return 4;
  return 1;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"STGIN traffic speed forecasting"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only warnings and errors on stderr");

  struct Command {
    const char* name;
    const char* help;
    void (*fn)(const RunConfig&);
    CLI::App* app = nullptr;
    std::string config_file;
    std::map<std::string, std::string> flags;
  };
  std::vector<Command> commands{
      {"build-graph", "threshold a distance matrix into an adjacency CSV", cmd_build_graph,
       nullptr, {}, {}},
      {"synth", "generate a synthetic ring-road dataset", cmd_synth, nullptr, {}, {}},
      {"train", "train a model and write a checkpoint and loss trace", cmd_train, nullptr, {},
       {}},
      {"evaluate", "score a checkpoint against the baselines on the test split", cmd_evaluate,
       nullptr, {}, {}},
  };
  for (Command& cmd : commands) {
    cmd.app = app.add_subcommand(cmd.name, cmd.help);
    cmd.app->add_option("-c,--config", cmd.config_file, "key = value configuration file");
    for (const ConfigKey& k : config_keys()) {
      cmd.app->add_option("--" + k.name, cmd.flags[k.name], k.help)
          ->default_str(k.default_value);
    }
  }

  std::vector<const char*> argv{"stgin"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  set_log_quiet(quiet);

  try {
    for (Command& cmd : commands) {
      if (!cmd.app->parsed()) continue;
      RunConfig config;
      if (!cmd.config_file.empty()) config.load_file(cmd.config_file);
      for (const ConfigKey& k : config_keys()) {
        if (cmd.app->count("--" + k.name) > 0) config.set(k.name, cmd.flags[k.name]);
      }
      cmd.fn(config);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace stgin::cli

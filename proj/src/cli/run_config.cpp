#include "stgin/run_config.hpp"

#include <fstream>
#include <sstream>

#include "stgin/csv.hpp"
#include "stgin/errors.hpp"

namespace stgin {

namespace {

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<ConfigKey> build_keys() {
  const StginDims d;
  const TrainConfig t;
  const SynthConfig s;
  return {
      {"speeds", "", "speed matrix CSV (rows = time steps, columns = nodes)"},
      {"distances", "", "N×N road distance CSV; builds the graph"},
      {"adjacency", "", "prebuilt N×N adjacency CSV; used instead of distances"},
      {"out_dir", "out", "directory for every output file"},
      {"checkpoint", "", "checkpoint to evaluate (default: out_dir/checkpoint.json)"},
      {"dataset", "dataset", "dataset label in reports"},
      {"sigma", "auto", "Gaussian kernel width, or auto for the std of the distances"},
      {"kappa", "auto", "distance threshold, or auto to use kappa_percentile"},
      {"kappa_percentile", "5", "percentile of off-diagonal distances used as the threshold"},
      {"train_ratio", "0.8", "share of windows before the chronological split"},
      {"input_len", fmt(d.input_len), "E, input steps"},
      {"horizon", fmt(d.horizon), "F′, forecast steps"},
      {"step_minutes", fmt(d.step_minutes), "minutes per time step"},
      {"fca_channels", fmt(d.fca_channels), "FCA output channels"},
      {"fca_width", fmt(d.fca_width), "FCA kernel width"},
      {"gat_heads", fmt(d.gat_heads), "GAT attention heads"},
      {"leaky_slope", fmt(d.leaky_slope), "GAT LeakyReLU slope"},
      {"d_model", fmt(d.d_model), "hidden width"},
      {"heads", fmt(d.heads), "Informer attention heads"},
      {"encoder_layers", fmt(d.encoder_layers), "attention layers in the main encoder stack"},
      {"replicas", fmt(d.replicas), "halving replicas"},
      {"decoder_layers", fmt(d.decoder_layers), "decoder layers"},
      {"token_len", fmt(d.token_len), "decoder start-token length"},
      {"c_factor", fmt(d.c_factor), "ProbSparse sampling factor"},
      {"ffn_multiplier", fmt(d.ffn_multiplier), "feed-forward width as a multiple of d_model"},
      {"shared_informer", fmt(d.shared_informer), "one Informer for all nodes"},
      {"use_graph", fmt(d.use_graph), "false bypasses the GAT"},
      {"batch_size", fmt(t.batch_size), "windows per update"},
      {"iterations", fmt(t.iterations), "parameter updates"},
      {"epochs", fmt(t.epochs), "nonzero: whole passes instead of iterations"},
      {"learning_rate", fmt(t.learning_rate), "Adam step size"},
      {"seed", fmt(t.seed), "seed for initialisation, shuffling and synth"},
      {"parallel", fmt(t.parallel), "OpenMP over batch samples and test windows"},
      {"log_every", "25", "progress line every this many updates (0: off)"},
      {"ar_order", "3", "lags of the linear AR baseline"},
      {"plot_nodes", "", "comma-separated node indices for prediction CSVs"},
      {"synth_nodes", fmt(s.nodes), "synthetic ring nodes"},
      {"synth_days", fmt(s.days), "synthetic days"},
      {"synth_segment_m", fmt(s.segment_m), "spacing between ring nodes in meters"},
      {"synth_segment_jitter_m", fmt(s.segment_jitter_m), "uniform jitter on each spacing"},
      {"synth_base_speed", fmt(s.base_speed), "mean speed"},
      {"synth_node_offset", fmt(s.node_offset), "per-node offset range"},
      {"synth_daily_amplitude", fmt(s.daily_amplitude), "daily wave amplitude"},
      {"synth_phase_jitter_steps", fmt(s.phase_jitter_steps), "per-node phase range"},
      {"synth_disturbance", fmt(s.disturbance), "std of the spatially coupled component"},
      {"synth_coupling", fmt(s.coupling), "share inherited from the downstream node"},
      {"synth_lag_steps", fmt(s.lag_steps), "upstream propagation lag in steps"},
      {"synth_ar_phi", fmt(s.ar_phi), "AR(1) coefficient of the disturbance"},
      {"synth_noise", fmt(s.noise), "observation noise std"},
      {"synth_incident_rate", fmt(s.incident_rate), "incidents per node per day"},
      {"synth_incident_depth", fmt(s.incident_depth), "speed drop at an incident"},
      {"synth_incident_steps", fmt(s.incident_steps), "incident duration in steps"},
      {"synth_min_speed", fmt(s.min_speed), "lower clamp on speeds"},
  };
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

RunConfig::RunConfig() {
  for (const ConfigKey& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second = value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

std::string RunConfig::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

std::filesystem::path RunConfig::path(const std::string& key) const { return text(key); }

std::size_t RunConfig::size(const std::string& key) const {
  const std::string v = text(key);
  const auto d = csv::parse_double(v);
  if (!d || *d < 0 || *d != static_cast<double>(static_cast<std::size_t>(*d))) {
    throw ConfigError(key + " must be a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(*d);
}

double RunConfig::real(const std::string& key) const {
  const std::string v = text(key);
  const auto d = csv::parse_double(v);
  if (!d) throw ConfigError(key + " must be a number, got '" + v + "'");
  return *d;
}

bool RunConfig::flag(const std::string& key) const {
  const std::string v = text(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + " must be true or false, got '" + v + "'");
}

std::vector<std::size_t> RunConfig::size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  std::istringstream in(text(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto d = csv::parse_double(item);
    if (!d || *d < 0 || *d != static_cast<double>(static_cast<std::size_t>(*d))) {
      throw ConfigError(key + " must list non-negative integers, got '" + item + "'");
    }
    out.push_back(static_cast<std::size_t>(*d));
  }
  return out;
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  for (const ConfigKey& k : config_keys()) out << k.name << " = " << values_.at(k.name) << '\n';
  return out.str();
}

StginDims dims_from(const RunConfig& c, std::size_t nodes) {
  StginDims d;
  d.nodes = nodes;
  d.input_len = c.size("input_len");
  d.horizon = c.size("horizon");
  d.step_minutes = c.real("step_minutes");
  d.fca_channels = c.size("fca_channels");
  d.fca_width = c.size("fca_width");
  d.gat_heads = c.size("gat_heads");
  d.leaky_slope = c.real("leaky_slope");
  d.d_model = c.size("d_model");
  d.heads = c.size("heads");
  d.encoder_layers = c.size("encoder_layers");
  d.replicas = c.size("replicas");
  d.decoder_layers = c.size("decoder_layers");
  d.token_len = c.size("token_len");
  d.c_factor = c.real("c_factor");
  d.ffn_multiplier = c.size("ffn_multiplier");
  d.shared_informer = c.flag("shared_informer");
  d.use_graph = c.flag("use_graph");
  return d;
}

TrainConfig train_from(const RunConfig& c) {
  TrainConfig t;
  t.batch_size = c.size("batch_size");
  t.iterations = c.size("iterations");
  t.epochs = c.size("epochs");
  t.learning_rate = c.real("learning_rate");
  t.seed = c.size("seed");
  t.parallel = c.flag("parallel");
  return t;
}

SynthConfig synth_from(const RunConfig& c) {
  SynthConfig s;
  s.nodes = c.size("synth_nodes");
  s.days = c.size("synth_days");
  s.step_minutes = c.real("step_minutes");
  s.seed = c.size("seed");
  s.segment_m = c.real("synth_segment_m");
  s.segment_jitter_m = c.real("synth_segment_jitter_m");
  s.base_speed = c.real("synth_base_speed");
  s.node_offset = c.real("synth_node_offset");
  s.daily_amplitude = c.real("synth_daily_amplitude");
  s.phase_jitter_steps = c.real("synth_phase_jitter_steps");
  s.disturbance = c.real("synth_disturbance");
  s.coupling = c.real("synth_coupling");
  s.lag_steps = c.size("synth_lag_steps");
  s.ar_phi = c.real("synth_ar_phi");
  s.noise = c.real("synth_noise");
  s.incident_rate = c.real("synth_incident_rate");
  s.incident_depth = c.real("synth_incident_depth");
  s.incident_steps = c.size("synth_incident_steps");
  s.min_speed = c.real("synth_min_speed");
  return s;
}

}  // namespace stgin

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stgin/tensor.hpp"

namespace stgin {

struct SpeedDataset {
  Tensor matrix;  // T_total×N; NaN marks a missing reading until cleaned
  double step_minutes = 5.0;
  std::string name;
  std::vector<std::string> header;  // column names when the file had a header
};

/// Rows are time steps, columns nodes. A first row with a non-numeric cell is
/// taken as a header. Empty cells and "nan" become NaN; negative readings are
/// kept and treated as missing by interpolate_missing.
SpeedDataset load_speed_csv(const std::filesystem::path& path);
void save_speed_csv(const std::filesystem::path& path, const Tensor& matrix);

/// Number of missing cells (NaN or negative).
std::size_t count_missing(const Tensor& matrix);

/// Per-column linear interpolation between the nearest valid readings; gaps
/// at either end take the nearest valid value.
SpeedDataset interpolate_missing(const SpeedDataset& ds);

struct NormStats {
  double min = 0.0;
  double max = 1.0;

  double apply(double v) const { return (v - min) / (max - min); }
  double invert(double v) const { return v * (max - min) + min; }
};

/// Min and max over the first `rows` time steps.
NormStats fit_normalization(const Tensor& matrix, std::size_t rows);
Tensor normalize(const Tensor& matrix, const NormStats& stats);
Tensor denormalize(const Tensor& matrix, const NormStats& stats);

struct SampleWindow {
  Tensor input;   // E×N
  Tensor target;  // F′×N
  std::size_t t_start = 0;
};

std::size_t window_count(std::size_t total_steps, std::size_t input_len, std::size_t horizon);
std::vector<SampleWindow> sliding_windows(const Tensor& matrix, std::size_t input_len,
                                          std::size_t horizon);

struct WindowSplit {
  std::vector<SampleWindow> train;
  std::vector<SampleWindow> test;
  std::size_t cut = 0;  // first time step that belongs to the test side
};

/// Time step where the test side begins: floor(ratio · window count).
std::size_t split_step(std::size_t windows, double ratio);

/// Test windows start at or after the cut; train windows end (target
/// included) at or before it. Windows straddling the cut are dropped.
WindowSplit split_chronological(std::vector<SampleWindow> windows, double ratio = 0.8);

struct SynthConfig {
  std::size_t nodes = 20;
  std::size_t days = 14;
  double step_minutes = 5.0;
  std::uint64_t seed = 1;
  double segment_m = 500.0;       // ring spacing between consecutive nodes
  double segment_jitter_m = 0.0;  // uniform ± jitter on each spacing
  double base_speed = 60.0;
  double node_offset = 8.0;      // node offsets uniform in ±this
  double daily_amplitude = 15.0;
  double phase_jitter_steps = 12.0;
  double disturbance = 5.0;  // std of the graph-correlated component
  double coupling = 0.8;     // share inherited from the downstream node
  std::size_t lag_steps = 3;
  double ar_phi = 0.9;
  double noise = 1.0;            // observation noise std
  double incident_rate = 0.0;    // expected incidents per node per day
  double incident_depth = 20.0;  // km/h at the bottom of a dip
  std::size_t incident_steps = 12;
  double min_speed = 1.0;

  void validate() const;
};

struct SynthData {
  Tensor speeds;     // (days·steps_per_day)×N
  Tensor distances;  // N×N directed ring distances in meters
  std::vector<double> positions;
  std::vector<double> offsets;
  std::vector<double> phases;
  struct Incident {
    std::size_t node, start;
  };
  std::vector<Incident> incidents;
};

/// Ring road traffic. Node a's disturbance copies node a+1's from
/// lag_steps earlier (congestion moving upstream) plus its own AR(1) noise.
SynthData synthesize(const SynthConfig& config);

/// Writes speeds.csv, distances.csv and truth.json into dir.
void write_synth(const std::filesystem::path& dir, const SynthConfig& config, const SynthData& data);

}  // namespace stgin

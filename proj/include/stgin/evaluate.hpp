#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "stgin/baselines.hpp"
#include "stgin/data.hpp"
#include "stgin/graph.hpp"
#include "stgin/stgin.hpp"

namespace stgin {

/// Maps one window's normalized E×N input to an F′×N normalized forecast.
using Forecaster = std::function<Tensor(const SampleWindow&)>;
using NamedForecaster = std::pair<std::string, Forecaster>;

struct MetricRow {
  std::string dataset;
  double horizon_min = 0.0;
  std::string method;
  std::string scale;  // "normalized" or "raw"
  double mae = 0.0;
  double rmse = 0.0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::vector<MetricRow> rows;
  std::vector<double> loss_trace;

  /// Row for (horizon, method, scale); throws ContractError if absent.
  const MetricRow& find(double horizon_min, const std::string& method,
                        const std::string& scale = "normalized") const;
};

/// 15/30/45/60 minutes where they fit inside F′ steps and fall on a step
/// boundary; the full F′·step reach when none do.
std::vector<double> report_horizons(std::size_t horizon, double step_minutes);

Forecaster stgin_forecaster(const StginModel& model, const RoadGraph& graph);
/// persistence, historical_average and, if given, linear_ar.
std::vector<NamedForecaster> baseline_forecasters(std::size_t horizon, const LinearAr* ar);

/// Forecasts of every method for every window, [method][window].
std::vector<std::vector<Tensor>> forecast_all(const std::vector<NamedForecaster>& methods,
                                              const std::vector<SampleWindow>& windows,
                                              bool parallel);

/// Metrics of each method at each reported horizon over the first k steps
/// of every window, on the normalized and the de-normalized scale.
EvalReport evaluate_forecasts(const std::vector<NamedForecaster>& methods,
                              const std::vector<std::vector<Tensor>>& forecasts,
                              const std::vector<SampleWindow>& windows, const NormStats& stats,
                              double step_minutes, const std::string& dataset);

/// STGIN plus the three baselines.
EvalReport evaluate(const StginModel& model, const std::vector<SampleWindow>& windows,
                    const RoadGraph& graph, const NormStats& stats, const LinearAr* ar,
                    const std::string& dataset, bool parallel = true);

void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
/// One "dataset=… horizon_min=… method=… …" line per row.
void write_report_log(const std::filesystem::path& path, const EvalReport& report);
void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& trace);
std::vector<double> read_loss_csv(const std::filesystem::path& path);

/// For each node and horizon writes node<a>_h<min>.csv with the forecast
/// made k steps ahead by every window, on the raw scale.
void write_node_predictions(const std::filesystem::path& dir,
                            const std::vector<std::size_t>& nodes,
                            const std::vector<Tensor>& forecasts,
                            const std::vector<SampleWindow>& windows, const NormStats& stats,
                            std::size_t input_len, double step_minutes);

}  // namespace stgin

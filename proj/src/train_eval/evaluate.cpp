#include "stgin/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "stgin/csv.hpp"
#include "stgin/errors.hpp"
#include "stgin/kernels.hpp"
#include "stgin/metrics.hpp"

namespace stgin {

namespace {

std::string num(std::size_t v) { return std::to_string(v); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::size_t steps_for(double horizon_min, double step_minutes) {
  return static_cast<std::size_t>(std::llround(horizon_min / step_minutes));
}

// First k rows of every window stacked into one (windows·k)×N block.
Tensor stack_prefix(const std::vector<const Tensor*>& blocks, std::size_t k) {
  const std::size_t n = blocks.front()->cols();
  Tensor out({blocks.size() * k, n});
  std::size_t r = 0;
  for (const Tensor* b : blocks) {
    if (b->rows() < k || b->cols() != n) {
      throw DimensionError("forecast " + shape_string(b->shape()) + " shorter than " + num(k) +
                           " steps or wrong width");
    }
    for (std::size_t t = 0; t < k; ++t, ++r) {
      for (std::size_t a = 0; a < n; ++a) out(r, a) = (*b)(t, a);
    }
  }
  return out;
}

}  // namespace

const MetricRow& EvalReport::find(double horizon_min, const std::string& method,
                                  const std::string& scale) const {
  for (const MetricRow& row : rows) {
    if (row.horizon_min == horizon_min && row.method == method && row.scale == scale) return row;
  }
  throw ContractError("no report row for " + method + " at " + csv::format_double(horizon_min) +
                      " min on the " + scale + " scale");
}

std::vector<double> report_horizons(std::size_t horizon, double step_minutes) {
  const double reach = static_cast<double>(horizon) * step_minutes;
  std::vector<double> out;
  for (double h : {15.0, 30.0, 45.0, 60.0}) {
    const double steps = h / step_minutes;
    if (h <= reach + 1e-9 && std::abs(steps - std::round(steps)) < 1e-9) out.push_back(h);
  }
  if (out.empty()) out.push_back(reach);
  return out;
}

Forecaster stgin_forecaster(const StginModel& model, const RoadGraph& graph) {
  return [&model, &graph](const SampleWindow& w) { return forward(w.input, graph, model).values; };
}

std::vector<NamedForecaster> baseline_forecasters(std::size_t horizon, const LinearAr* ar) {
  std::vector<NamedForecaster> out;
  out.emplace_back("persistence",
                   [horizon](const SampleWindow& w) { return persistence_forecast(w.input, horizon); });
  out.emplace_back("historical_average", [horizon](const SampleWindow& w) {
    return historical_average_forecast(w.input, horizon);
  });
  if (ar != nullptr) {
    out.emplace_back("linear_ar",
                     [ar, horizon](const SampleWindow& w) { return ar->forecast(w.input, horizon); });
  }
  return out;
}

std::vector<std::vector<Tensor>> forecast_all(const std::vector<NamedForecaster>& methods,
                                              const std::vector<SampleWindow>& windows,
                                              bool parallel) {
  std::vector<std::vector<Tensor>> out(methods.size(), std::vector<Tensor>(windows.size()));
  const std::size_t jobs = methods.size() * windows.size();
  auto body = [&](std::size_t i) {
    const std::size_t m = i / windows.size(), w = i % windows.size();
    out[m][w] = methods[m].second(windows[w]);
  };
  if (parallel) {
    kernels::parallel::for_each_index(jobs, body);
  } else {
    kernels::serial::for_each_index(jobs, body);
  }
  return out;
}

EvalReport evaluate_forecasts(const std::vector<NamedForecaster>& methods,
                              const std::vector<std::vector<Tensor>>& forecasts,
                              const std::vector<SampleWindow>& windows, const NormStats& stats,
                              double step_minutes, const std::string& dataset) {
  if (windows.empty()) throw DataError("no test windows to evaluate");
  if (forecasts.size() != methods.size()) throw ContractError("one forecast set per method");
  const std::size_t horizon = windows.front().target.rows();
  std::vector<const Tensor*> truths;
  for (const SampleWindow& w : windows) truths.push_back(&w.target);

  EvalReport report;
  for (double h : report_horizons(horizon, step_minutes)) {
    const std::size_t k = steps_for(h, step_minutes);
    const Tensor truth = stack_prefix(truths, k);
    const Tensor truth_raw = denormalize(truth, stats);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      std::vector<const Tensor*> preds;
      for (const Tensor& f : forecasts[m]) preds.push_back(&f);
      const Tensor pred = stack_prefix(preds, k);
      const Tensor pred_raw = denormalize(pred, stats);
      report.rows.push_back({dataset, h, methods[m].first, "normalized", mae(truth, pred),
                             rmse(truth, pred), accuracy(truth, pred)});
      report.rows.push_back({dataset, h, methods[m].first, "raw", mae(truth_raw, pred_raw),
                             rmse(truth_raw, pred_raw), accuracy(truth_raw, pred_raw)});
    }
  }
  return report;
}

EvalReport evaluate(const StginModel& model, const std::vector<SampleWindow>& windows,
                    const RoadGraph& graph, const NormStats& stats, const LinearAr* ar,
                    const std::string& dataset, bool parallel) {
  std::vector<NamedForecaster> methods{{"stgin", stgin_forecaster(model, graph)}};
  for (auto& b : baseline_forecasters(model.dims.horizon, ar)) methods.push_back(std::move(b));
  const auto forecasts = forecast_all(methods, windows, parallel);
  return evaluate_forecasts(methods, forecasts, windows, stats, model.dims.step_minutes, dataset);
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_out(path);
  out << "dataset,horizon_min,method,scale,mae,rmse,accuracy\n";
  for (const MetricRow& r : report.rows) {
    out << r.dataset << ',' << csv::format_double(r.horizon_min) << ',' << r.method << ','
        << r.scale << ',' << csv::format_double(r.mae) << ',' << csv::format_double(r.rmse) << ','
        << csv::format_double(r.accuracy) << '\n';
  }
}

void write_report_log(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_out(path);
  for (const MetricRow& r : report.rows) {
    out << "dataset=" << r.dataset << " horizon_min=" << csv::format_double(r.horizon_min)
        << " method=" << r.method << " scale=" << r.scale << " mae=" << csv::format_double(r.mae)
        << " rmse=" << csv::format_double(r.rmse)
        << " accuracy=" << csv::format_double(r.accuracy) << '\n';
  }
  if (!report.loss_trace.empty()) {
    out << "updates=" << report.loss_trace.size()
        << " final_loss=" << csv::format_double(report.loss_trace.back()) << '\n';
  }
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& trace) {
  auto out = open_out(path);
  out << "update,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << i + 1 << ',' << csv::format_double(trace[i]) << '\n';
  }
}

std::vector<double> read_loss_csv(const std::filesystem::path& path) {
  const auto rows = csv::read_cells(path);
  std::vector<double> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto v = rows[i].size() == 2 ? csv::parse_double(rows[i][1]) : std::nullopt;
    if (!v) throw FormatError(path.string() + ": bad loss row " + num(i + 1));
    out.push_back(*v);
  }
  return out;
}

void write_node_predictions(const std::filesystem::path& dir,
                            const std::vector<std::size_t>& nodes,
                            const std::vector<Tensor>& forecasts,
                            const std::vector<SampleWindow>& windows, const NormStats& stats,
                            std::size_t input_len, double step_minutes) {
  if (windows.empty()) return;
  const std::size_t n = windows.front().target.cols();
  for (std::size_t a : nodes) {
    if (a >= n) {
      throw ParameterError("node index " + num(a) + " out of range for " + num(n) + " nodes");
    }
  }
  const std::size_t horizon = windows.front().target.rows();
  for (double h : report_horizons(horizon, step_minutes)) {
    const std::size_t k = steps_for(h, step_minutes);
    for (std::size_t a : nodes) {
      std::ostringstream name;
      name << "node" << a << "_h" << csv::format_double(h) << ".csv";
      auto out = open_out(dir / name.str());
      out << "time_step,minutes,truth,prediction\n";
      for (std::size_t w = 0; w < windows.size(); ++w) {
        const std::size_t t = windows[w].t_start + input_len + k - 1;
        out << t << ',' << csv::format_double(static_cast<double>(t) * step_minutes) << ','
            << csv::format_double(stats.invert(windows[w].target(k - 1, a))) << ','
            << csv::format_double(stats.invert(forecasts[w](k - 1, a))) << '\n';
      }
    }
  }
}

}  // namespace stgin

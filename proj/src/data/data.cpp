#include "stgin/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "stgin/csv.hpp"
#include "stgin/errors.hpp"
#include "stgin/log.hpp"

namespace stgin {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool is_missing(double v) { return std::isnan(v) || v < 0.0; }

bool is_nan_text(const std::string& cell) {
  std::string lower;
  for (char c : cell) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower == "nan" || lower == "na" || lower == "null";
}

}  // namespace

SpeedDataset load_speed_csv(const std::filesystem::path& path) {
  const auto rows = csv::read_cells(path);
  if (rows.empty()) throw FormatError(path.string() + ": no data");
  SpeedDataset ds;
  ds.name = path.stem().string();
  std::size_t first = 0;
  for (const auto& cell : rows.front()) {
    if (!cell.empty() && !is_nan_text(cell) && !csv::parse_double(cell)) {
      ds.header = rows.front();
      first = 1;
      break;
    }
  }
  if (rows.size() <= first) throw FormatError(path.string() + ": header but no rows");
  const std::size_t cols = rows[first].size();
  const std::size_t steps = rows.size() - first;
  if (!ds.header.empty() && ds.header.size() != cols) {
    throw FormatError(path.string() + ": header has " + std::to_string(ds.header.size()) +
                      " columns, data has " + std::to_string(cols));
  }
  ds.matrix = Tensor({steps, cols});
  std::size_t negatives = 0;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const std::size_t line = r + 1;
    if (rows[r].size() != cols) {
      throw FormatError(path.string() + ": line " + std::to_string(line) + " has " +
                        std::to_string(rows[r].size()) + " columns, expected " +
                        std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& cell = rows[r][c];
      double v = kMissing;
      if (!cell.empty() && !is_nan_text(cell)) {
        const auto parsed = csv::parse_double(cell);
        if (!parsed || std::isinf(*parsed)) {
          throw FormatError(path.string() + ": line " + std::to_string(line) + ", column " +
                            std::to_string(c + 1) + ": '" + cell + "' is not a speed");
        }
        v = *parsed;
        negatives += v < 0.0;
      }
      ds.matrix(r - first, c) = v;
    }
  }
  if (negatives > 0) {
    log_warning(path.string() + ": " + std::to_string(negatives) +
                " negative reading(s) treated as missing");
  }
  return ds;
}

void save_speed_csv(const std::filesystem::path& path, const Tensor& matrix) {
  csv::write_matrix(path, matrix);
}

std::size_t count_missing(const Tensor& matrix) {
  return static_cast<std::size_t>(
      std::count_if(matrix.storage().begin(), matrix.storage().end(), is_missing));
}

SpeedDataset interpolate_missing(const SpeedDataset& ds) {
  SpeedDataset out = ds;
  Tensor& m = out.matrix;
  const std::size_t steps = m.rows(), cols = m.cols();
  for (std::size_t c = 0; c < cols; ++c) {
    std::size_t prev = steps;  // last valid row seen, steps = none yet
    for (std::size_t t = 0; t < steps; ++t) {
      if (is_missing(m(t, c))) continue;
      if (prev == steps) {
        for (std::size_t s = 0; s < t; ++s) m(s, c) = m(t, c);
      } else if (t > prev + 1) {
        const double a = m(prev, c), b = m(t, c);
        const double span = static_cast<double>(t - prev);
        for (std::size_t s = prev + 1; s < t; ++s) {
          m(s, c) = a + (b - a) * static_cast<double>(s - prev) / span;
        }
      }
      prev = t;
    }
    if (prev == steps) {
      throw DataError("column " + std::to_string(c + 1) + " has no valid readings");
    }
    for (std::size_t s = prev + 1; s < steps; ++s) m(s, c) = m(prev, c);
  }
  return out;
}

NormStats fit_normalization(const Tensor& matrix, std::size_t rows) {
  if (rows == 0 || rows > matrix.rows()) {
    throw DataError("normalization needs between 1 and " + std::to_string(matrix.rows()) +
                    " rows, got " + std::to_string(rows));
  }
  NormStats s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < rows * matrix.cols(); ++i) {
    const double v = matrix[i];
    if (std::isnan(v)) throw DataError("normalization input still has missing values");
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  if (!(s.max > s.min)) throw DataError("training data has zero range; cannot normalize");
  return s;
}

Tensor normalize(const Tensor& matrix, const NormStats& stats) {
  if (!(stats.max > stats.min)) throw DataError("normalization range is empty");
  Tensor out = matrix;
  for (double& v : out.storage()) v = stats.apply(v);
  return out;
}

Tensor denormalize(const Tensor& matrix, const NormStats& stats) {
  Tensor out = matrix;
  for (double& v : out.storage()) v = stats.invert(v);
  return out;
}

std::size_t window_count(std::size_t total_steps, std::size_t input_len, std::size_t horizon) {
  if (input_len == 0 || horizon == 0) throw ParameterError("window lengths must be positive");
  if (input_len + horizon > total_steps) {
    throw ParameterError("window of " + std::to_string(input_len) + " + " +
                         std::to_string(horizon) + " steps exceeds the series length " +
                         std::to_string(total_steps));
  }
  return total_steps - (input_len + horizon) + 1;
}

std::vector<SampleWindow> sliding_windows(const Tensor& matrix, std::size_t input_len,
                                          std::size_t horizon) {
  const std::size_t count = window_count(matrix.rows(), input_len, horizon);
  const std::size_t n = matrix.cols();
  std::vector<SampleWindow> out;
  out.reserve(count);
  const auto data = matrix.storage().begin();
  for (std::size_t t = 0; t < count; ++t) {
    SampleWindow w;
    w.t_start = t;
    w.input = Tensor({input_len, n}, std::vector<double>(data + static_cast<std::ptrdiff_t>(t * n),
                                                         data + static_cast<std::ptrdiff_t>((t + input_len) * n)));
    w.target = Tensor({horizon, n},
                      std::vector<double>(data + static_cast<std::ptrdiff_t>((t + input_len) * n),
                                          data + static_cast<std::ptrdiff_t>((t + input_len + horizon) * n)));
    out.push_back(std::move(w));
  }
  return out;
}

std::size_t split_step(std::size_t windows, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DataError("split ratio must be strictly between 0 and 1 so both sides are nonempty");
  }
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(windows)));
}

WindowSplit split_chronological(std::vector<SampleWindow> windows, double ratio) {
  if (windows.empty()) throw DataError("no windows to split");
  std::stable_sort(windows.begin(), windows.end(),
                   [](const SampleWindow& a, const SampleWindow& b) { return a.t_start < b.t_start; });
  WindowSplit split;
  split.cut = windows.front().t_start + split_step(windows.size(), ratio);
  for (auto& w : windows) {
    const std::size_t end = w.t_start + w.input.rows() + w.target.rows();
    if (w.t_start >= split.cut) {
      split.test.push_back(std::move(w));
    } else if (end <= split.cut) {
      split.train.push_back(std::move(w));
    }
  }
  if (split.train.empty()) throw DataError("split leaves no training windows");
  if (split.test.empty()) throw DataError("split leaves no test windows");
  return split;
}

}  // namespace stgin

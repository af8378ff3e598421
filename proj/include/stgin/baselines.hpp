#pragma once

#include <cstddef>
#include <vector>

#include "stgin/tensor.hpp"

namespace stgin {

/// Repeats the last input row F′ times.
Tensor persistence_forecast(const Tensor& input, std::size_t horizon);
/// Per-node mean of the input window, repeated F′ times.
Tensor historical_average_forecast(const Tensor& input, std::size_t horizon);

/// Per-node y_t = c + Σ φ_i y_{t−i}, fitted by least squares and iterated
/// forward for multi-step forecasts.
struct LinearAr {
  std::size_t order = 0;
  std::vector<std::vector<double>> coefficients;  // per node: c, φ_1 .. φ_p

  Tensor forecast(const Tensor& input, std::size_t horizon) const;
};

/// Fits on the rows of `series` (T×N). A singular normal system falls back to
/// ridge regularisation `ridge` with a warning.
LinearAr fit_linear_ar(const Tensor& series, std::size_t order, double ridge = 1e-6);

}  // namespace stgin

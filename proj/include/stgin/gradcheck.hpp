#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "stgin/autograd.hpp"
#include "stgin/tensor.hpp"

namespace stgin {

struct GradReport {
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;  // flat index over all checked parameters
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double step = 1e-5;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, rel_floor).
  // The floor keeps coordinates whose true gradient is ~0 from reporting pure
  // finite-difference roundoff (~1e-11) as a large relative error.
  double rel_floor = 1e-6;
};

/// Scalar function of one parameter tensor, recorded on the given tape.
using ScalarFn = std::function<Var(Tape&, Var)>;
/// Scalar function of several parameter tensors.
using MultiScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Compares the reverse-mode gradient of f at params with central
/// differences (f(p+h) - f(p-h)) / 2h, coordinate by coordinate.
GradReport grad_check(const ScalarFn& f, const Tensor& params, GradCheckOptions options = {});
GradReport grad_check(const MultiScalarFn& f, const std::vector<Tensor>& params,
                      GradCheckOptions options = {});

}  // namespace stgin

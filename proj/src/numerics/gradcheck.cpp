#include "stgin/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "stgin/errors.hpp"

namespace stgin {

namespace {

double evaluate(const MultiScalarFn& f, const std::vector<Tensor>& params) {
  Tape tape(false);
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.constant(p));
  const Var out = f(tape, vars);
  if (out.value().size() != 1) {
    throw ContractError("grad_check: function returned shape " + shape_string(out.shape()) +
                        ", expected a scalar");
  }
  return out.value()[0];
}

}  // namespace

GradReport grad_check(const MultiScalarFn& f, const std::vector<Tensor>& params,
                      GradCheckOptions options) {
  if (!(options.step > 0.0)) throw ParameterError("grad_check: step must be positive");

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Tensor& p : params) vars.push_back(tape.variable(p));
    const Var out = f(tape, vars);
    if (out.value().size() != 1) {
      throw ContractError("grad_check: function returned shape " + shape_string(out.shape()) +
                          ", expected a scalar");
    }
    tape.backward(out);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }

  GradReport report;
  std::vector<Tensor> probe = params;
  std::size_t flat = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i, ++flat) {
      const double original = params[t][i];
      probe[t][i] = original + options.step;
      const double plus = evaluate(f, probe);
      probe[t][i] = original - options.step;
      const double minus = evaluate(f, probe);
      probe[t][i] = original;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[t][i];
      const double abs_err = std::abs(a - numeric);
      const double rel_err =
          abs_err / std::max({std::abs(a), std::abs(numeric), options.rel_floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel_err > report.max_rel_error || report.checked == 0) {
        report.max_rel_error = std::max(report.max_rel_error, rel_err);
        report.worst_index = flat;
      }
      ++report.checked;
    }
  }
  return report;
}

GradReport grad_check(const ScalarFn& f, const Tensor& params, GradCheckOptions options) {
  return grad_check(
      MultiScalarFn([&f](Tape& tape, const std::vector<Var>& vars) { return f(tape, vars[0]); }),
      std::vector<Tensor>{params}, options);
}

}  // namespace stgin

#include "stgin/baselines.hpp"

#include <Eigen/Dense>
#include <string>

#include "stgin/errors.hpp"
#include "stgin/log.hpp"

namespace stgin {

Tensor persistence_forecast(const Tensor& input, std::size_t horizon) {
  const std::size_t e = input.rows(), n = input.cols();
  if (e == 0) throw DimensionError("persistence needs at least one input step");
  Tensor out({horizon, n});
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t a = 0; a < n; ++a) out(k, a) = input(e - 1, a);
  }
  return out;
}

Tensor historical_average_forecast(const Tensor& input, std::size_t horizon) {
  const std::size_t e = input.rows(), n = input.cols();
  if (e == 0) throw DimensionError("historical average needs at least one input step");
  Tensor out({horizon, n});
  for (std::size_t a = 0; a < n; ++a) {
    double mean = 0.0;
    // Running mean: exact on constant windows.
    for (std::size_t t = 0; t < e; ++t) mean += (input(t, a) - mean) / static_cast<double>(t + 1);
    for (std::size_t k = 0; k < horizon; ++k) out(k, a) = mean;
  }
  return out;
}

Tensor LinearAr::forecast(const Tensor& input, std::size_t horizon) const {
  const std::size_t e = input.rows(), n = input.cols();
  if (coefficients.size() != n) {
    throw DimensionError("AR model has " + std::to_string(coefficients.size()) +
                         " nodes, input has " + std::to_string(n));
  }
  if (e < order) {
    throw DimensionError("AR order " + std::to_string(order) + " exceeds the input length " +
                         std::to_string(e));
  }
  Tensor out({horizon, n});
  std::vector<double> history(order + horizon);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& c = coefficients[a];
    for (std::size_t i = 0; i < order; ++i) history[i] = input(e - order + i, a);
    for (std::size_t k = 0; k < horizon; ++k) {
      double y = c[0];
      for (std::size_t i = 1; i <= order; ++i) y += c[i] * history[order + k - i];
      history[order + k] = y;
      out(k, a) = y;
    }
  }
  return out;
}

LinearAr fit_linear_ar(const Tensor& series, std::size_t order, double ridge) {
  const std::size_t steps = series.rows(), n = series.cols();
  if (order == 0) throw ParameterError("AR order must be at least 1");
  if (steps <= order + 1) {
    throw DataError("AR fit needs more than " + std::to_string(order + 1) + " steps, got " +
                    std::to_string(steps));
  }
  LinearAr model;
  model.order = order;
  const std::size_t rows = steps - order, cols = order + 1;
  std::size_t regularised = 0;
  for (std::size_t a = 0; a < n; ++a) {
    bool constant = true;
    for (std::size_t t = 1; t < steps && constant; ++t) constant = series(t, a) == series(0, a);
    std::vector<double> coef(cols, 0.0);
    if (constant) {
      // Every predictor is collinear with the intercept; the exact fit is c = y.
      coef[0] = series(0, a);
      model.coefficients.push_back(coef);
      continue;
    }
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t t = r + order;
      x(static_cast<Eigen::Index>(r), 0) = 1.0;
      for (std::size_t i = 1; i <= order; ++i) {
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = series(t - i, a);
      }
      y(static_cast<Eigen::Index>(r)) = series(t, a);
    }
    Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::VectorXd rhs = x.transpose() * y;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    // A numerically rank-deficient system can still factor; check the
    // conditioning through the factor's diagonal.
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
      const Eigen::VectorXd diag = Eigen::MatrixXd(llt.matrixL()).diagonal();
      ok = diag.minCoeff() > 1e-7 * diag.maxCoeff();
    }
    if (!ok) {
      ++regularised;
      gram.diagonal().array() += ridge;
      llt.compute(gram);
    }
    const Eigen::VectorXd beta = llt.solve(rhs);
    for (std::size_t i = 0; i < cols; ++i) coef[i] = beta(static_cast<Eigen::Index>(i));
    model.coefficients.push_back(coef);
  }
  if (regularised > 0) {
    log_warning("linear AR: singular least-squares system on " + std::to_string(regularised) +
                " node(s); used ridge " + std::to_string(ridge));
  }
  return model;
}

}  // namespace stgin

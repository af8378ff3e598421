#include "stgin/metrics.hpp"

#include <cmath>

#include "stgin/errors.hpp"

namespace stgin {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.size() != b.size() || a.size() == 0) {
    throw DimensionError(std::string(what) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " do not match");
  }
}

double sum_sq_diff(const Tensor& a, const Tensor& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return total;
}

}  // namespace

double mse_loss(const Tensor& prediction, const Tensor& target) {
  require_same(prediction, target, "mse_loss");
  return sum_sq_diff(prediction, target) / static_cast<double>(prediction.size());
}

double rmse(const Tensor& truth, const Tensor& prediction) {
  require_same(truth, prediction, "rmse");
  return std::sqrt(sum_sq_diff(truth, prediction) / static_cast<double>(truth.size()));
}

double mae(const Tensor& truth, const Tensor& prediction) {
  require_same(truth, prediction, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) total += std::abs(truth[i] - prediction[i]);
  return total / static_cast<double>(truth.size());
}

double accuracy(const Tensor& truth, const Tensor& prediction) {
  require_same(truth, prediction, "accuracy");
  double norm = 0.0;
  for (double v : truth.storage()) norm += v * v;
  if (!(norm > 0.0)) throw DataError("accuracy is undefined when the ground truth is all zero");
  return 1.0 - std::sqrt(sum_sq_diff(truth, prediction)) / std::sqrt(norm);
}

}  // namespace stgin

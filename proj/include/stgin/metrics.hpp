#pragma once

#include "stgin/tensor.hpp"

namespace stgin {

/// Mean of squared differences.
double mse_loss(const Tensor& prediction, const Tensor& target);
/// sqrt(mean (y − ŷ)²) over every instant and node.
double rmse(const Tensor& truth, const Tensor& prediction);
double mae(const Tensor& truth, const Tensor& prediction);
/// 1 − ‖Y − Ŷ‖_F / ‖Y‖_F. Throws DataError when ‖Y‖_F = 0.
double accuracy(const Tensor& truth, const Tensor& prediction);

}  // namespace stgin

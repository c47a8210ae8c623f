#pragma once

#include <vector>

#include "gde/autodiff/tape.hpp"

namespace gde::train {

using ad::Matrix;

// Mean of squared differences.
double mse(const Matrix& pred, const Matrix& target);

// (100 / (p T)) * || sum_t (y_t - yhat_t) ./ y_t ||_1. The signed relative
// errors are summed over time before the 1-norm is taken, so errors of
// opposite sign cancel. Each y_t is vectorized (p entries).
double mape(const std::vector<Matrix>& targets, const std::vector<Matrix>& preds);

// Conventional MAPE: (100 / (p T)) * sum_t || (y_t - yhat_t) ./ y_t ||_1.
double mape_abs(const std::vector<Matrix>& targets, const std::vector<Matrix>& preds);

// (1 / p) * || sqrt((1 / T) sum_t (y_t - yhat_t)^2) ||_1, elementwise square and root.
double rmse(const std::vector<Matrix>& targets, const std::vector<Matrix>& preds);

}  // namespace gde::train

#include "gde/train/metrics.hpp"

#include <cmath>
#include <string>

#include "gde/errors.hpp"

namespace gde::train {

namespace {

void check_pairs(const char* metric, const std::vector<Matrix>& targets, const std::vector<Matrix>& preds) {
  if (targets.size() != preds.size())
    throw ShapeError(std::string(metric) + ": " + std::to_string(targets.size()) + " targets vs " +
                     std::to_string(preds.size()) + " predictions");
  if (targets.empty()) throw ContractError(std::string(metric) + ": no samples");
  for (std::size_t t = 0; t < targets.size(); ++t)
    if (targets[t].rows() != preds[t].rows() || targets[t].cols() != preds[t].cols() ||
        targets[t].size() != targets[0].size())
      throw ShapeError(std::string(metric) + ": sample " + std::to_string(t) + " has target " +
                       ad::shape_string(targets[t]) + " and prediction " + ad::shape_string(preds[t]));
}

// Signed relative errors of sample t, row-major vectorized.
Matrix relative_error(const std::vector<Matrix>& targets, const std::vector<Matrix>& preds, std::size_t t,
                      const char* metric) {
  const Matrix& y = targets[t];
  for (ad::Index i = 0; i < y.size(); ++i)
    if (y.data()[i] == 0.0)
      throw std::domain_error(std::string(metric) + ": zero target at (t = " + std::to_string(t) +
                              ", index = " + std::to_string(i) + ")");
  return ((y - preds[t]).array() / y.array()).matrix();
}

}  // namespace

double mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("mse: " + ad::shape_string(pred) + " vs " + ad::shape_string(target));
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

double mape(const std::vector<Matrix>& targets, const std::vector<Matrix>& preds) {
  check_pairs("mape", targets, preds);
  Matrix acc = Matrix::Zero(targets[0].rows(), targets[0].cols());
  for (std::size_t t = 0; t < targets.size(); ++t) acc += relative_error(targets, preds, t, "mape");
  const double p = static_cast<double>(targets[0].size());
  const double T = static_cast<double>(targets.size());
  return 100.0 / (p * T) * acc.cwiseAbs().sum();
}

double mape_abs(const std::vector<Matrix>& targets, const std::vector<Matrix>& preds) {
  check_pairs("mape_abs", targets, preds);
  double acc = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) acc += relative_error(targets, preds, t, "mape_abs").cwiseAbs().sum();
  const double p = static_cast<double>(targets[0].size());
  const double T = static_cast<double>(targets.size());
  return 100.0 / (p * T) * acc;
}

double rmse(const std::vector<Matrix>& targets, const std::vector<Matrix>& preds) {
  check_pairs("rmse", targets, preds);
  Matrix acc = Matrix::Zero(targets[0].rows(), targets[0].cols());
  for (std::size_t t = 0; t < targets.size(); ++t) acc += (targets[t] - preds[t]).cwiseAbs2();
  const double p = static_cast<double>(targets[0].size());
  const double T = static_cast<double>(targets.size());
  return (acc / T).cwiseSqrt().sum() / p;
}

}  // namespace gde::train

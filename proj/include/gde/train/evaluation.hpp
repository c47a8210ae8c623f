#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gde/autodiff/parameters.hpp"
#include "gde/fields/layers.hpp"

#include <nlohmann/json.hpp>

namespace gde::train {

using ad::Matrix;

// The default extrapolation horizons, one per results-table column.
inline const std::vector<int> kDefaultHorizons = {1, 3, 5, 10, 15, 20, 50};

// Nominal test trajectory: states[k] and the graph operator in force at k.
struct NominalTrajectory {
  std::vector<Matrix> states;
  std::vector<Matrix> operators;
};

// Maps a stacked batch of states (batch * nodes rows) to next states under
// the matching block operator.
using OneStepPredictor = std::function<Matrix(const Matrix& inputs, const fields::GraphOperator& op)>;

struct ExtrapolationScore {
  int horizon = 0;
  std::size_t predictions = 0;
  // MAPE over the concatenated predicted trajectory.
  double mape = 0.0;
  // MAPE averaged over reset windows.
  double mape_windowed = 0.0;
  double mape_abs = 0.0;
  double rmse = 0.0;
};

// For each horizon h: starting from the nominal state, predict h steps by
// feeding predictions back, reset to the nominal state, and repeat until the
// end of the trajectory. Graph operators are taken from the nominal
// trajectory. Windows are independent and evaluated as one batch.
std::vector<ExtrapolationScore> eval_extrapolation(const OneStepPredictor& model, const NominalTrajectory& test,
                                                   const std::vector<int>& horizons);

// Mean and sample standard deviation across seeds for each horizon.
struct EvalReport {
  std::string model;
  std::string metric;
  std::vector<int> horizons;
  std::vector<unsigned long long> seeds;
  // values[s][h]: seed s, horizon h.
  std::vector<std::vector<double>> values;

  std::vector<double> mean() const;
  std::vector<double> stddev() const;
  void add_seed(unsigned long long seed, std::vector<double> row);

  nlohmann::json to_json() const;
  // One row per (model, metric, horizon, seed) and aggregate rows with seed
  // "mean" and "std".
  std::string to_csv(bool header = true) const;
};

// Argmax accuracy on the rows selected by mask. Throws ContractError for an
// empty mask.
double eval_node_classification(const Matrix& logits, const std::vector<int>& labels, const std::vector<char>& mask);

}  // namespace gde::train

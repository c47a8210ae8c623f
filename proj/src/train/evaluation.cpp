#include "gde/train/evaluation.hpp"

#include <cmath>
#include <sstream>

#include "gde/errors.hpp"
#include "gde/train/metrics.hpp"

namespace gde::train {

std::vector<ExtrapolationScore> eval_extrapolation(const OneStepPredictor& model, const NominalTrajectory& test,
                                                   const std::vector<int>& horizons) {
  if (test.states.size() < 2) throw ContractError("eval_extrapolation: test trajectory needs two states");
  if (test.operators.size() + 1 < test.states.size())
    throw ContractError("eval_extrapolation: missing graph operators");
  const std::size_t last = test.states.size() - 1;
  const ad::Index nodes = test.states.front().rows();
  const ad::Index width = test.states.front().cols();
  std::vector<ExtrapolationScore> out;
  for (int h : horizons) {
    if (h < 1) throw ContractError("eval_extrapolation: horizons must be positive");
    const auto hz = static_cast<std::size_t>(h);
    std::vector<std::size_t> starts;
    for (std::size_t w = 0; w < last; w += hz) starts.push_back(w);

    std::vector<Matrix> current;
    for (std::size_t w : starts) current.push_back(test.states[w]);
    std::vector<std::vector<Matrix>> preds(starts.size());
    std::vector<std::vector<Matrix>> targets(starts.size());
    for (std::size_t i = 1; i <= hz; ++i) {
      std::vector<std::size_t> active;
      for (std::size_t k = 0; k < starts.size(); ++k)
        if (starts[k] + i <= last) active.push_back(k);
      if (active.empty()) break;
      Matrix batch(static_cast<ad::Index>(active.size()) * nodes, width);
      std::vector<Matrix> blocks;
      for (std::size_t a = 0; a < active.size(); ++a) {
        batch.middleRows(static_cast<ad::Index>(a) * nodes, nodes) = current[active[a]];
        blocks.push_back(test.operators[starts[active[a]] + i - 1]);
      }
      const Matrix next = model(batch, ad::BlockOperator::stack(std::move(blocks)));
      for (std::size_t a = 0; a < active.size(); ++a) {
        const std::size_t k = active[a];
        current[k] = next.middleRows(static_cast<ad::Index>(a) * nodes, nodes);
        preds[k].push_back(current[k]);
        targets[k].push_back(test.states[starts[k] + i]);
      }
    }

    std::vector<Matrix> all_preds;
    std::vector<Matrix> all_targets;
    double windowed = 0.0;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      windowed += mape(targets[k], preds[k]);
      all_preds.insert(all_preds.end(), preds[k].begin(), preds[k].end());
      all_targets.insert(all_targets.end(), targets[k].begin(), targets[k].end());
    }
    ExtrapolationScore s;
    s.horizon = h;
    s.predictions = all_preds.size();
    s.mape = mape(all_targets, all_preds);
    s.mape_windowed = windowed / static_cast<double>(starts.size());
    s.mape_abs = mape_abs(all_targets, all_preds);
    s.rmse = rmse(all_targets, all_preds);
    out.push_back(s);
  }
  return out;
}

void EvalReport::add_seed(unsigned long long seed, std::vector<double> row) {
  if (row.size() != horizons.size())
    throw ShapeError("EvalReport: " + std::to_string(row.size()) + " values for " + std::to_string(horizons.size()) +
                     " horizons");
  seeds.push_back(seed);
  values.push_back(std::move(row));
}

std::vector<double> EvalReport::mean() const {
  std::vector<double> m(horizons.size(), 0.0);
  if (values.empty()) return m;
  for (const auto& row : values)
    for (std::size_t h = 0; h < row.size(); ++h) m[h] += row[h];
  for (double& v : m) v /= static_cast<double>(values.size());
  return m;
}

std::vector<double> EvalReport::stddev() const {
  std::vector<double> s(horizons.size(), 0.0);
  if (values.size() < 2) return s;
  const auto m = mean();
  for (const auto& row : values)
    for (std::size_t h = 0; h < row.size(); ++h) s[h] += (row[h] - m[h]) * (row[h] - m[h]);
  for (double& v : s) v = std::sqrt(v / static_cast<double>(values.size() - 1));
  return s;
}

nlohmann::json EvalReport::to_json() const {
  return {{"model", model},   {"metric", metric}, {"horizons", horizons}, {"seeds", seeds},
          {"values", values}, {"mean", mean()},   {"std", stddev()}};
}

std::string EvalReport::to_csv(bool header) const {
  std::ostringstream os;
  os.precision(17);
  if (header) os << "model,metric,horizon,seed,value\n";
  for (std::size_t s = 0; s < seeds.size(); ++s)
    for (std::size_t h = 0; h < horizons.size(); ++h)
      os << model << ',' << metric << ',' << horizons[h] << ',' << seeds[s] << ',' << values[s][h] << '\n';
  const auto m = mean();
  const auto sd = stddev();
  for (std::size_t h = 0; h < horizons.size(); ++h) os << model << ',' << metric << ',' << horizons[h] << ",mean," << m[h] << '\n';
  for (std::size_t h = 0; h < horizons.size(); ++h) os << model << ',' << metric << ',' << horizons[h] << ",std," << sd[h] << '\n';
  return os.str();
}

double eval_node_classification(const Matrix& logits, const std::vector<int>& labels, const std::vector<char>& mask) {
  if (static_cast<ad::Index>(labels.size()) != logits.rows() || mask.size() != labels.size())
    throw ShapeError("eval_node_classification: " + std::to_string(labels.size()) + " labels for " +
                     ad::shape_string(logits));
  std::size_t total = 0;
  std::size_t correct = 0;
  for (ad::Index i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    ad::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    ++total;
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  if (total == 0) throw ContractError("eval_node_classification: empty mask");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace gde::train

#include "gde/train/optim.hpp"

#include <cmath>
#include <numbers>

#include "gde/errors.hpp"

namespace gde::train {

void adam_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state) {
  adam_step(params, grads, state, state.config.lr);
}

void adam_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state, double lr) {
  const AdamConfig& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    if (git->second.rows() != p.rows() || git->second.cols() != p.cols())
      throw ShapeError("adam: gradient for '" + name + "' is " + ad::shape_string(git->second) + ", parameter is " +
                       ad::shape_string(p));
    Matrix g = git->second;
    if (c.weight_decay != 0.0) g += c.weight_decay * p;
    auto [mit, mnew] = state.first_moment.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    auto [vit, vnew] = state.second_moment.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseAbs2();
    if (lr == 0.0) continue;
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
  }
}

ScheduleKind parse_schedule(std::string_view name) {
  if (name == "constant") return ScheduleKind::constant;
  if (name == "cosine" || name == "cosine-annealing" || name == "cosine_annealing") return ScheduleKind::cosine_annealing;
  throw ConfigError("unknown learning-rate schedule '" + std::string(name) + "'");
}

double LrSchedule::at(int epoch) const {
  if (kind == ScheduleKind::constant) return base_lr;
  if (t0 <= 0) throw ConfigError("cosine annealing needs t0 > 0");
  const double phase = static_cast<double>(epoch % t0) / t0;
  return min_lr + (base_lr - min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

}  // namespace gde::train

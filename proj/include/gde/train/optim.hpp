#pragma once

#include <map>
#include <string>
#include <string_view>

#include "gde/autodiff/parameters.hpp"

namespace gde::train {

using ad::Matrix;
using ad::ParameterSet;
using GradientMap = std::map<std::string, Matrix>;

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct OptimizerState {
  AdamConfig config;
  std::map<std::string, Matrix> first_moment;
  std::map<std::string, Matrix> second_moment;
  long step = 0;
};

// Bias-corrected Adam. The L2 penalty weight_decay * p is added to each
// gradient before the moments are updated. `lr` overrides config.lr when
// positive or zero (used by schedules).
void adam_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state);
void adam_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state, double lr);

enum class ScheduleKind { constant, cosine_annealing };

ScheduleKind parse_schedule(std::string_view name);

// Cosine annealing with warm restarts every t0 epochs:
// lr(e) = lr_min + (base - lr_min) * (1 + cos(pi * (e mod t0) / t0)) / 2.
struct LrSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double base_lr = 0.01;
  double min_lr = 0.0;
  int t0 = 10;

  double at(int epoch) const;
};

}  // namespace gde::train

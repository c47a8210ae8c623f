#pragma once

#include <functional>
#include <string>

#include "gde/autodiff/parameters.hpp"

namespace gde::ad {

// Builds a scalar loss from parameters bound on a fresh tape.
using LossBuilder = std::function<Tensor(const Binding& b)>;

struct GradcheckResult {
  std::string name;
  // max over parameters of |analytic - numeric|_2 / max(|analytic|_2, |numeric|_2)
  double worst_relative = 0.0;
  std::string worst_parameter;
  // Entry with the largest absolute disagreement inside worst_parameter.
  Index worst_row = 0;
  Index worst_col = 0;
  double tolerance = 0.0;
  bool passed = false;
};

// Compares reverse-mode gradients with central differences (step eps) for
// every entry of every parameter. Tensors whose analytic and numeric norms
// are both below `floor` count as agreeing.
GradcheckResult gradcheck(const std::string& name, const ParameterSet& params, const LossBuilder& loss,
                          double tolerance, double eps = 1e-5, double floor = 1e-9);

}  // namespace gde::ad

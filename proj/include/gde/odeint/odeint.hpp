#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "gde/fields/layers.hpp"

namespace gde::odeint {

using ad::Matrix;
using ad::Tensor;
using fields::VectorField;

enum class Scheme { rk2, rk4, dopri5 };

Scheme parse_scheme(std::string_view name);
std::string_view to_string(Scheme s);
// Field evaluations per step for fixed-step schemes, new evaluations per
// attempted step for dopri5.
int stages(Scheme s);

struct SolverConfig {
  Scheme scheme = Scheme::rk4;
  double s0 = 0.0;
  double s1 = 1.0;
  int fixed_steps = 1;
  double rtol = 1e-6;
  double atol = 1e-6;
  int max_steps = 10000;
  double dt_min = 1e-12;
  bool record_trajectory = false;

  // Throws ConfigError when the interval or tolerances are invalid.
  void validate() const;
};

struct SolveResult {
  Tensor final_state;
  long nfe = 0;
  int accepted = 0;
  int rejected = 0;
  // Accepted-step states, including the initial one.
  std::vector<std::pair<double, Matrix>> trajectory;
};

struct StepResult {
  Tensor next;
  // Embedded (4th order) error estimate, dopri5 only.
  std::optional<Matrix> error;
  // Field value at the step end, reusable as the next first stage (dopri5).
  Tensor last_stage;
  int evaluations = 0;
};

// One explicit Runge-Kutta step. rk2 is the explicit midpoint rule, rk4 the
// classical tableau and dopri5 the Dormand-Prince 5(4) pair. For dopri5 a
// known first stage may be passed in (FSAL) and is not re-evaluated.
StepResult rk_step(const VectorField& field, double s, const Tensor& h, double dt, Scheme scheme,
                   const std::optional<Tensor>& first_stage = std::nullopt);

struct ControllerDecision {
  bool accept = false;
  double dt_next = 0.0;
};

// RMS of err / (atol + rtol * max(|y0|, |y1|)).
double scaled_error_norm(const Matrix& error, const Matrix& y0, const Matrix& y1, double rtol, double atol);

// accept iff err_norm <= 1; dt_next = dt * clamp(0.9 * err_norm^(-1/5), 0.2, 5).
// Throws DivergenceError when dt_next falls below dt_min.
ControllerDecision adaptive_controller(double err_norm, double dt, double dt_min);

// Integrates dh/ds = field(s, h) from s0 to s1. Every accepted step stays on
// the tape, so gradients reach both the field parameters and h0. Rejected
// dopri5 attempts are rewound off the tape; step sizes are constants.
SolveResult solve(const VectorField& field, const Tensor& h0, const SolverConfig& cfg);

// Linear interpolation of a recorded trajectory at the requested depths.
std::vector<Matrix> sample_trajectory(const std::vector<std::pair<double, Matrix>>& trajectory,
                                      const std::vector<double>& at);

}  // namespace gde::odeint

#include "gde/odeint/odeint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "gde/errors.hpp"

namespace gde::odeint {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 7> kDpC = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr std::array<std::array<double, 6>, 7> kDpA = {{
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
}};
// 5th-order weights minus 4th-order weights.
constexpr std::array<double, 7> kDpE = {71.0 / 57600,      0.0,          -71.0 / 16695, 71.0 / 1920,
                                        -17253.0 / 339200, 22.0 / 525,   -1.0 / 40};

void check_finite(const Tensor& t, const char* what, double s) {
  if (!t.value().allFinite())
    throw NumericalError(std::string("non-finite ") + what + " at s = " + std::to_string(s));
}

Tensor eval(const VectorField& field, double s, const Tensor& h, int& count) {
  Tensor k = field(s, h);
  ++count;
  if (k.rows() != h.rows() || k.cols() != h.cols())
    throw ShapeError("vector field returned " + ad::shape_string(k.value()) + " for state " +
                     ad::shape_string(h.value()));
  check_finite(k, "field value", s);
  return k;
}

Tensor combine(const Tensor& h, std::initializer_list<Tensor> ks, std::initializer_list<double> ws) {
  std::vector<Tensor> terms{h};
  std::vector<double> coeffs{1.0};
  auto w = ws.begin();
  for (const auto& k : ks) {
    if (*w != 0.0) {
      terms.push_back(k);
      coeffs.push_back(*w);
    }
    ++w;
  }
  return ad::lincomb(terms, coeffs);
}

}  // namespace

Scheme parse_scheme(std::string_view name) {
  if (name == "rk2") return Scheme::rk2;
  if (name == "rk4") return Scheme::rk4;
  if (name == "dopri5" || name == "dpr5") return Scheme::dopri5;
  throw ConfigError("unknown solver scheme '" + std::string(name) + "'");
}

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::rk2: return "rk2";
    case Scheme::rk4: return "rk4";
    case Scheme::dopri5: return "dopri5";
  }
  return "rk4";
}

int stages(Scheme s) {
  switch (s) {
    case Scheme::rk2: return 2;
    case Scheme::rk4: return 4;
    case Scheme::dopri5: return 6;
  }
  return 0;
}

void SolverConfig::validate() const {
  if (!(s1 > s0)) throw ConfigError("solver interval must satisfy s1 > s0");
  if (fixed_steps <= 0) throw ConfigError("solver steps must be positive");
  if (scheme == Scheme::dopri5) {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("solver tolerances must be positive");
    if (max_steps <= 0) throw ConfigError("solver max_steps must be positive");
    if (!(dt_min > 0.0)) throw ConfigError("solver dt_min must be positive");
  }
}

StepResult rk_step(const VectorField& field, double s, const Tensor& h, double dt, Scheme scheme,
                   const std::optional<Tensor>& first_stage) {
  if (!(dt > 0.0)) throw ContractError("rk_step: dt must be positive");
  StepResult r;
  int& n = r.evaluations;
  switch (scheme) {
    case Scheme::rk2: {
      Tensor k1 = eval(field, s, h, n);
      Tensor k2 = eval(field, s + 0.5 * dt, combine(h, {k1}, {0.5 * dt}), n);
      r.next = combine(h, {k2}, {dt});
      break;
    }
    case Scheme::rk4: {
      Tensor k1 = eval(field, s, h, n);
      Tensor k2 = eval(field, s + 0.5 * dt, combine(h, {k1}, {0.5 * dt}), n);
      Tensor k3 = eval(field, s + 0.5 * dt, combine(h, {k2}, {0.5 * dt}), n);
      Tensor k4 = eval(field, s + dt, combine(h, {k3}, {dt}), n);
      r.next = combine(h, {k1, k2, k3, k4}, {dt / 6, dt / 3, dt / 3, dt / 6});
      break;
    }
    case Scheme::dopri5: {
      std::array<Tensor, 7> k;
      k[0] = first_stage ? *first_stage : eval(field, s, h, n);
      for (std::size_t i = 1; i < 7; ++i) {
        std::vector<Tensor> terms{h};
        std::vector<double> coeffs{1.0};
        for (std::size_t j = 0; j < i; ++j) {
          if (kDpA[i][j] == 0.0) continue;
          terms.push_back(k[j]);
          coeffs.push_back(dt * kDpA[i][j]);
        }
        Tensor y = ad::lincomb(terms, coeffs);
        // The last row of the tableau is the 5th-order solution itself.
        if (i == 6) r.next = y;
        k[i] = eval(field, s + kDpC[i] * dt, y, n);
      }
      Matrix err = Matrix::Zero(h.rows(), h.cols());
      for (std::size_t i = 0; i < 7; ++i)
        if (kDpE[i] != 0.0) err.noalias() += (dt * kDpE[i]) * k[i].value();
      r.error = std::move(err);
      r.last_stage = k[6];
      break;
    }
  }
  check_finite(r.next, "state", s + dt);
  return r;
}

double scaled_error_norm(const Matrix& error, const Matrix& y0, const Matrix& y1, double rtol, double atol) {
  const auto scale = atol + rtol * y0.array().abs().max(y1.array().abs());
  const double ms = (error.array() / scale).square().mean();
  return std::sqrt(ms);
}

namespace {

double next_step(double err_norm, double dt) {
  double factor = 5.0;
  if (err_norm > 0.0) factor = std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
  return dt * factor;
}

}  // namespace

ControllerDecision adaptive_controller(double err_norm, double dt, double dt_min) {
  if (!(dt > 0.0)) throw ContractError("adaptive_controller: dt must be positive");
  if (std::isnan(err_norm)) throw NumericalError("adaptive_controller: error estimate is NaN");
  ControllerDecision d;
  d.accept = err_norm <= 1.0;
  d.dt_next = next_step(err_norm, dt);
  if (d.dt_next < dt_min)
    throw DivergenceError("step size " + std::to_string(d.dt_next) + " fell below dt_min " + std::to_string(dt_min),
                          0);
  return d;
}

SolveResult solve(const VectorField& field, const Tensor& h0, const SolverConfig& cfg) {
  cfg.validate();
  SolveResult res;
  const double span = cfg.s1 - cfg.s0;
  if (cfg.record_trajectory) res.trajectory.emplace_back(cfg.s0, h0.value());

  if (cfg.scheme != Scheme::dopri5) {
    const double dt = span / cfg.fixed_steps;
    Tensor h = h0;
    for (int i = 0; i < cfg.fixed_steps; ++i) {
      const double s = cfg.s0 + i * dt;
      StepResult step = rk_step(field, s, h, dt, cfg.scheme);
      res.nfe += step.evaluations;
      h = step.next;
      ++res.accepted;
      if (cfg.record_trajectory) res.trajectory.emplace_back(cfg.s0 + (i + 1) * dt, h.value());
    }
    res.final_state = h;
    return res;
  }

  ad::Tape& tape = h0.tape();
  int evals = 0;
  Tensor h = h0;
  Tensor k1 = eval(field, cfg.s0, h, evals);
  res.nfe = evals;
  double s = cfg.s0;
  double dt = span / 100.0;
  const double done_eps = 1e-12 * span;
  while (cfg.s1 - s > done_eps) {
    if (res.accepted + res.rejected >= cfg.max_steps)
      throw DivergenceError("dopri5 exceeded max_steps = " + std::to_string(cfg.max_steps), res.nfe);
    const bool last = s + dt >= cfg.s1;
    const double step_dt = last ? cfg.s1 - s : dt;
    const std::size_t mark = tape.mark();
    StepResult step = rk_step(field, s, h, step_dt, Scheme::dopri5, k1);
    res.nfe += step.evaluations;
    const double err = scaled_error_norm(*step.error, h.value(), step.next.value(), cfg.rtol, cfg.atol);
    if (std::isnan(err)) throw NumericalError("dopri5 error estimate is NaN at s = " + std::to_string(s));
    const bool accept = err <= 1.0;
    const double dt_next = next_step(err, step_dt);
    if (accept) {
      s = last ? cfg.s1 : s + step_dt;
      h = step.next;
      k1 = step.last_stage;
      ++res.accepted;
      if (cfg.record_trajectory) res.trajectory.emplace_back(s, h.value());
    } else {
      tape.rewind(mark);
      ++res.rejected;
    }
    if (cfg.s1 - s > done_eps && dt_next < cfg.dt_min)
      throw DivergenceError("dopri5 step size " + std::to_string(dt_next) + " fell below dt_min at s = " +
                                std::to_string(s),
                            res.nfe);
    dt = dt_next;
  }
  res.final_state = h;
  return res;
}

std::vector<Matrix> sample_trajectory(const std::vector<std::pair<double, Matrix>>& trajectory,
                                      const std::vector<double>& at) {
  if (trajectory.empty()) throw ContractError("sample_trajectory: empty trajectory");
  std::vector<Matrix> out;
  out.reserve(at.size());
  for (double s : at) {
    if (s <= trajectory.front().first) {
      out.push_back(trajectory.front().second);
      continue;
    }
    if (s >= trajectory.back().first) {
      out.push_back(trajectory.back().second);
      continue;
    }
    auto it = std::upper_bound(trajectory.begin(), trajectory.end(), s,
                               [](double v, const auto& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (s - lo.first) / (hi.first - lo.first);
    out.push_back((1.0 - w) * lo.second + w * hi.second);
  }
  return out;
}

}  // namespace gde::odeint

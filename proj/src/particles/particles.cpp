#include "gde/particles/particles.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gde/errors.hpp"

namespace gde::particles {

namespace {

constexpr double kSingularDistance = 1e-9;

Vec2 row(const Matrix& m, ad::Index i) { return {m(i, 0), m(i, 1)}; }

}  // namespace

Matrix ParticleState::features() const {
  Matrix f(positions.rows(), 4);
  f.leftCols(2) = positions;
  f.rightCols(2) = velocities;
  return f;
}

ParticleState ParticleState::from_features(const Matrix& f) {
  if (f.cols() != 4) throw ShapeError("particle features must be 4 wide, got " + ad::shape_string(f));
  return {f.leftCols(2), f.rightCols(2)};
}

void SimConfig::validate() const {
  if (n == 0) throw ConfigError("simulation: n must be positive");
  if (!(alpha > 0) || !(beta > 0) || !(r > 0)) throw ConfigError("simulation: alpha, beta and r must be positive");
  if (!(dt > 0)) throw ConfigError("simulation: dt must be positive");
  if (!(horizon > 0)) throw ConfigError("simulation: T must be positive");
}

std::size_t SimConfig::length() const {
  // The small slack keeps e.g. T = 1, dt = 0.1 at 11 states despite rounding.
  return static_cast<std::size_t>(std::floor(horizon / dt * (1.0 + 1e-12))) + 1;
}

Vec2 pair_force(const Vec2& xi, const Vec2& xj, const Vec2& vi, const Vec2& vj, double alpha, double beta, double r) {
  const double dx = xi[0] - xj[0];
  const double dy = xi[1] - xj[1];
  const double dist = std::hypot(dx, dy);
  if (dist < kSingularDistance)
    throw SingularityError("pair_force: coincident particles (distance " + std::to_string(dist) + ")", 0, 0);
  const double nx = dx / dist;
  const double ny = dy / dist;
  const double radial_speed = (vi[0] - vj[0]) * nx + (vi[1] - vj[1]) * ny;
  const double magnitude = alpha * (dist - r) + beta * radial_speed;
  return {-magnitude * nx, -magnitude * ny};
}

bool interacting(const Vec2& xi, const Vec2& xj, double r) {
  return 2.0 * std::hypot(xi[0] - xj[0], xi[1] - xj[1]) <= r;
}

Matrix acceleration(const ParticleState& state, const SimConfig& cfg) {
  const auto n = state.positions.rows();
  Matrix acc = -state.positions;
  for (ad::Index i = 0; i < n; ++i) {
    const Vec2 xi = row(state.positions, i);
    const Vec2 vi = row(state.velocities, i);
    for (ad::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec2 xj = row(state.positions, j);
      if (!interacting(xi, xj, cfg.r)) continue;
      Vec2 f;
      try {
        f = pair_force(xi, xj, vi, row(state.velocities, j), cfg.alpha, cfg.beta, cfg.r);
      } catch (const SingularityError&) {
        throw SingularityError("particles " + std::to_string(i) + " and " + std::to_string(j) + " coincide",
                               static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
      acc(i, 0) -= f[0];
      acc(i, 1) -= f[1];
    }
  }
  return acc;
}

graph::Graph interaction_graph(const ParticleState& state, double r) {
  const auto n = state.positions.rows();
  std::vector<graph::Edge> edges;
  for (ad::Index i = 0; i < n; ++i)
    for (ad::Index j = i + 1; j < n; ++j)
      if (interacting(row(state.positions, i), row(state.positions, j), r))
        edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return graph::Graph::undirected(static_cast<std::size_t>(n), edges);
}

ParticleState random_initial_state(const SimConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> pos(-2.0, 2.0);
  std::uniform_real_distribution<double> vel(-0.5, 0.5);
  const auto n = static_cast<ad::Index>(cfg.n);
  ParticleState s{Matrix(n, 2), Matrix(n, 2)};
  for (ad::Index i = 0; i < n; ++i) {
    bool ok = false;
    while (!ok) {
      s.positions(i, 0) = pos(rng);
      s.positions(i, 1) = pos(rng);
      ok = true;
      for (ad::Index j = 0; j < i; ++j)
        if (std::hypot(s.positions(i, 0) - s.positions(j, 0), s.positions(i, 1) - s.positions(j, 1)) < 1e-3)
          ok = false;
    }
    s.velocities(i, 0) = vel(rng);
    s.velocities(i, 1) = vel(rng);
  }
  return s;
}

Rollout simulate(const SimConfig& cfg, const ParticleState& init) {
  cfg.validate();
  if (init.size() != cfg.n) throw ShapeError("simulate: initial state has " + std::to_string(init.size()) +
                                             " particles, config says " + std::to_string(cfg.n));
  Rollout out;
  out.dt = cfg.dt;
  out.horizon = cfg.horizon;
  const std::size_t len = cfg.length();
  out.states.reserve(len);
  out.adjacencies.reserve(len);
  ParticleState s = init;
  const double dt = cfg.dt;
  for (std::size_t k = 0; k < len; ++k) {
    out.states.push_back(s);
    out.adjacencies.push_back(interaction_graph(s, cfg.r));
    if (k + 1 == len) break;
    try {
      const Matrix& x = s.positions;
      const Matrix& v = s.velocities;
      const Matrix a1 = acceleration(s, cfg);
      const ParticleState s2{x + 0.5 * dt * v, v + 0.5 * dt * a1};
      const Matrix a2 = acceleration(s2, cfg);
      const ParticleState s3{x + 0.5 * dt * s2.velocities, v + 0.5 * dt * a2};
      const Matrix a3 = acceleration(s3, cfg);
      const ParticleState s4{x + dt * s3.velocities, v + dt * a3};
      const Matrix a4 = acceleration(s4, cfg);
      ParticleState next;
      next.positions = x + dt / 6.0 * (v + 2.0 * s2.velocities + 2.0 * s3.velocities + s4.velocities);
      next.velocities = v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
      s = std::move(next);
    } catch (const SingularityError& e) {
      throw SingularityError("step " + std::to_string(k) + ": " + e.what(), e.first(), e.second());
    }
    if (!s.positions.allFinite() || !s.velocities.allFinite())
      throw NumericalError("simulate: non-finite state at step " + std::to_string(k + 1));
  }
  return out;
}

Rollout simulate(const SimConfig& cfg) { return simulate(cfg, random_initial_state(cfg)); }

ParticleDataset make_dataset(const Rollout& rollout) {
  if (rollout.size() < 2) throw ContractError("make_dataset: rollout needs at least two states");
  const std::size_t pairs = rollout.size() - 1;
  const std::size_t train = (pairs + 1) / 2;
  ParticleDataset d;
  for (std::size_t k = 0; k < pairs; ++k) {
    Sample s{rollout.states[k].features(), rollout.adjacencies[k], rollout.states[k + 1].features()};
    (k < train ? d.train : d.test).push_back(std::move(s));
  }
  return d;
}

}  // namespace gde::particles

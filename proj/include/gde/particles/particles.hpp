#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gde/autodiff/tape.hpp"
#include "gde/graph/graph.hpp"

namespace gde::particles {

using ad::Matrix;
using Vec2 = std::array<double, 2>;

// Planar positions and velocities, one row per particle (n x 2 each).
struct ParticleState {
  Matrix positions;
  Matrix velocities;

  std::size_t size() const { return static_cast<std::size_t>(positions.rows()); }
  // Node features [x1, x2, v1, v2] per particle (n x 4).
  Matrix features() const;
  static ParticleState from_features(const Matrix& f);
  bool operator==(const ParticleState& o) const {
    return positions == o.positions && velocities == o.velocities;
  }
};

struct SimConfig {
  std::size_t n = 10;
  double alpha = 1.0;
  double beta = 1.0;
  double r = 1.0;
  double dt = 1.95e-3;
  double horizon = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
  // floor(T / dt) + 1 stored states.
  std::size_t length() const;
};

struct Rollout {
  std::vector<ParticleState> states;
  std::vector<graph::Graph> adjacencies;
  double dt = 0.0;
  double horizon = 0.0;

  std::size_t size() const { return states.size(); }
};

// Spring-with-drag interaction on particle i from particle j:
// -[alpha(|d| - r) + beta <dv, d> / |d|] d / |d| with d = x_i - x_j.
Vec2 pair_force(const Vec2& xi, const Vec2& xj, const Vec2& vi, const Vec2& vj, double alpha, double beta, double r);

// Interaction set of i: j != i with 2|x_i - x_j| <= r.
bool interacting(const Vec2& xi, const Vec2& xj, double r);

// xdd_i = -x_i - sum_{j in N_i} f_ij. Throws SingularityError for coincident
// interacting particles.
Matrix acceleration(const ParticleState& state, const SimConfig& cfg);

// A_t(i, j) = 1 iff j is in N_i(t).
graph::Graph interaction_graph(const ParticleState& state, double r);

// Positions uniform in [-2, 2]^2, velocities uniform in [-0.5, 0.5]^2, no
// pair closer than 1e-3.
ParticleState random_initial_state(const SimConfig& cfg);

// Fixed-step RK4 on (x, v). State k is at time k * dt.
Rollout simulate(const SimConfig& cfg, const ParticleState& init);
Rollout simulate(const SimConfig& cfg);

// One-step pair (X_t, A_t, X_{t+dt}) with 4-wide node features.
struct Sample {
  Matrix input;
  graph::Graph graph;
  Matrix target;
};

struct ParticleDataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// First half of the transitions for training, the rest for testing.
ParticleDataset make_dataset(const Rollout& rollout);

}  // namespace gde::particles

#pragma once

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gde/fields/fields.hpp"
#include "gde/odeint/odeint.hpp"

namespace gde::train {

using ad::Binding;
using ad::Index;
using ad::Matrix;
using ad::ParameterSet;
using ad::Tensor;
using fields::GraphOperator;

// One-step predictors for the multi-particle system. Inputs are stacked
// batches of per-particle [x, v] rows (batch * nodes x 4).
enum class ParticleModelKind {
  static_mlp,  // fully connected map X_t -> X_{t+dt}
  neural_ode,  // fully connected vector field on the flattened state
  gcde,        // first-order graph convolution field
  gcde2,       // second-order graph convolution field with augmentation
};

ParticleModelKind parse_particle_model(std::string_view name);
std::string_view to_string(ParticleModelKind kind);

struct ParticleModel {
  ParticleModelKind kind = ParticleModelKind::gcde;
  Index nodes = 0;
  std::vector<fields::DenseLayer> mlp;
  std::vector<fields::GCNLayer> gcn;
  // Extra zero-initialised channels per half of the second-order state.
  Index augment = 0;
  // Integration interval is [0, step] in physical time.
  odeint::SolverConfig solver;

  // Architectures: static / neural ODE 4n-8n-8n-4n; GCDE 4-16-16-4;
  // second-order GCDE on an 8-wide state, 8-32-32-4 acceleration field.
  static ParticleModel create(ParticleModelKind kind, Index nodes, double step, odeint::SolverConfig solver,
                              ParameterSet& params, std::mt19937_64& rng);

  struct Output {
    Tensor prediction;
    long nfe = 0;
  };

  Output forward(const Binding& b, const Tensor& inputs, const GraphOperator& op) const;
  Matrix predict(const ParameterSet& params, const Matrix& inputs, const GraphOperator& op) const;
};

}  // namespace gde::train

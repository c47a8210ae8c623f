#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gde/particles/particles.hpp"
#include "gde/train/evaluation.hpp"
#include "gde/train/optim.hpp"
#include "gde/train/particle_models.hpp"

namespace gde::train {

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  long nfe = 0;
};

struct ParticleTrainConfig {
  int epochs = 300;
  std::size_t batch_size = 64;
  AdamConfig adam;
  // Multiplies the one-step MSE. Zero selects 1 / step^2, which turns the
  // loss into a mean squared error on finite-difference rates.
  double loss_scale = 0.0;
  std::uint64_t seed = 0;
};

struct ParticleRun {
  ParticleModel model;
  ParameterSet params;
  std::vector<EpochRecord> curve;
};

// Shuffled mini-batch Adam on the one-step MSE of the training split.
// `on_epoch` is called after each epoch (may be empty).
ParticleRun train_particle_model(ParticleModel model, ParameterSet params, const particles::ParticleDataset& data,
                                 const ParticleTrainConfig& cfg,
                                 const std::function<void(const EpochRecord&)>& on_epoch = {});

// Test split as a nominal trajectory with normalized adjacency per state.
NominalTrajectory test_trajectory(const particles::ParticleDataset& data);

OneStepPredictor make_predictor(const ParticleModel& model, const ParameterSet& params);

// Mean one-step loss (unscaled MSE) over a split.
double one_step_mse(const ParticleModel& model, const ParameterSet& params,
                    const std::vector<particles::Sample>& samples);

}  // namespace gde::train

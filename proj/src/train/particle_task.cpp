#include "gde/train/particle_task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "gde/errors.hpp"

namespace gde::train {

namespace {

struct Batch {
  Matrix inputs;
  Matrix targets;
  fields::GraphOperator op;
};

Batch make_batch(const std::vector<particles::Sample>& samples, const std::vector<Matrix>& operators,
                 const std::vector<std::size_t>& index, std::size_t begin, std::size_t end) {
  const ad::Index nodes = samples.front().input.rows();
  const auto count = static_cast<ad::Index>(end - begin);
  Batch b{Matrix(count * nodes, 4), Matrix(count * nodes, 4), nullptr};
  std::vector<Matrix> blocks;
  blocks.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const auto row = static_cast<ad::Index>(i - begin) * nodes;
    b.inputs.middleRows(row, nodes) = samples[index[i]].input;
    b.targets.middleRows(row, nodes) = samples[index[i]].target;
    blocks.push_back(operators[index[i]]);
  }
  b.op = ad::BlockOperator::stack(std::move(blocks));
  return b;
}

std::vector<Matrix> normalized_operators(const std::vector<particles::Sample>& samples) {
  std::vector<Matrix> ops;
  ops.reserve(samples.size());
  for (const auto& s : samples) ops.push_back(graph::normalize(s.graph).matrix);
  return ops;
}

}  // namespace

ParticleRun train_particle_model(ParticleModel model, ParameterSet params, const particles::ParticleDataset& data,
                                 const ParticleTrainConfig& cfg,
                                 const std::function<void(const EpochRecord&)>& on_epoch) {
  if (data.train.empty()) throw ContractError("train_particle_model: empty training split");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  const double step = model.solver.s1 - model.solver.s0;
  const double loss_scale = cfg.loss_scale > 0.0 ? cfg.loss_scale : 1.0 / (step * step);

  const std::vector<Matrix> ops = normalized_operators(data.train);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  OptimizerState opt;
  opt.config = cfg.adam;

  ParticleRun run{std::move(model), std::move(params), {}};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    long nfe = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const Batch batch = make_batch(data.train, ops, order, begin, end);
      ad::Tape tape;
      ad::Binding b(tape, run.params);
      auto out = run.model.forward(b, tape.constant(batch.inputs), batch.op);
      const Tensor loss = ad::scale(ad::mse(out.prediction, tape.constant(batch.targets)), loss_scale);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value))
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      adam_step(run.params, b.collect(tape.backward(loss)), opt);
      loss_sum += value * static_cast<double>(end - begin);
      nfe += out.nfe;
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()) / loss_scale, nfe};
    run.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return run;
}

NominalTrajectory test_trajectory(const particles::ParticleDataset& data) {
  if (data.test.empty()) throw ContractError("test_trajectory: empty test split");
  NominalTrajectory t;
  for (const auto& s : data.test) {
    t.states.push_back(s.input);
    t.operators.push_back(graph::normalize(s.graph).matrix);
  }
  t.states.push_back(data.test.back().target);
  return t;
}

OneStepPredictor make_predictor(const ParticleModel& model, const ParameterSet& params) {
  return [&model, &params](const Matrix& inputs, const fields::GraphOperator& op) {
    return model.predict(params, inputs, op);
  };
}

double one_step_mse(const ParticleModel& model, const ParameterSet& params,
                    const std::vector<particles::Sample>& samples) {
  if (samples.empty()) throw ContractError("one_step_mse: no samples");
  const std::vector<Matrix> ops = normalized_operators(samples);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  const Batch b = make_batch(samples, ops, order, 0, samples.size());
  const Matrix pred = model.predict(params, b.inputs, b.op);
  return (pred - b.targets).squaredNorm() / static_cast<double>(pred.size());
}

}  // namespace gde::train

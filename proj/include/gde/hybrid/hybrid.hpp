#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gde/fields/fields.hpp"
#include "gde/graph/graph.hpp"
#include "gde/odeint/odeint.hpp"

namespace gde::hybrid {

using ad::Binding;
using ad::Index;
using ad::Matrix;
using ad::ParameterSet;
using ad::Tensor;
using fields::GraphOperator;

// Graph-convolutional GRU jump. No bias terms.
struct GCGRUCell {
  std::string xz, hz, xr, hr, xh, hh;
  Index input_width = 0;
  Index hidden_width = 0;

  static GCGRUCell create(ParameterSet& params, const std::string& name, Index input_width, Index hidden_width,
                          std::mt19937_64& rng);
};

// Z = sig(LX Wxz + LH Whz), R = sig(LX Wxr + LH Whr),
// C = tanh(LX Wxh + L(R*H) Whh), H+ = Z*H + (1 - Z)*C.
Tensor gcgru_jump(const Tensor& h, const Tensor& x, const GraphOperator& laplacian, const GCGRUCell& cell,
                  const Binding& b);
Tensor gcgru_jump(const Tensor& h, const Tensor& x, const graph::NormalizedAdjacency& laplacian,
                  const GCGRUCell& cell, const Binding& b);

// Dense GRU on a single row vector (per-sequence, graph-free baseline).
struct GRUCell {
  std::string xz, hz, bz, xr, hr, br, xh, hh, bh;
  Index input_width = 0;
  Index hidden_width = 0;

  static GRUCell create(ParameterSet& params, const std::string& name, Index input_width, Index hidden_width,
                        std::mt19937_64& rng);
  Tensor operator()(const Tensor& h, const Tensor& x, const Binding& b) const;
};

struct HybridSchedule {
  std::vector<double> arrival_times;
  std::size_t window = 5;

  void validate() const;
};

// Flow / jump / output model. Without a flow field it is the discrete
// GCGRU sequence model.
struct HybridModel {
  std::optional<fields::GCDEField> flow;
  GCGRUCell cell;
  fields::OutputHead head;
  // Integration length per unit of timestamp gap.
  double time_scale = 1.0;

  static HybridModel create(ParameterSet& params, Index input_width, Index hidden_width, Index head_hidden,
                            Index output_width, const std::vector<fields::LayerSpec>& flow_specs,
                            std::mt19937_64& rng);
};

struct HybridTrajectory {
  // Segment k covers [t_{k-1}, t_k]; segment 0 is empty (no flow before the
  // first arrival).
  std::vector<odeint::SolveResult> segments;
  std::vector<Tensor> pre_jump;
  std::vector<Tensor> post_jump;
  std::vector<Tensor> outputs;
  long nfe = 0;
};

// Runs flow, jump and output over every arrival of the stream. The hidden
// state starts at zero and the first observation enters through a jump. The
// flow before arrival k uses the graph at t_k.
HybridTrajectory hybrid_forward(const HybridModel& model, const Binding& b, const graph::GraphSequence& stream,
                                const odeint::SolverConfig& solver);

// Same loop with a caller-provided flow (one field per segment index k >= 1).
HybridTrajectory hybrid_forward(const HybridModel& model, const Binding& b, const graph::GraphSequence& stream,
                                const odeint::SolverConfig& solver,
                                const std::function<fields::VectorField(std::size_t k)>& flow_for_segment);

// Value-level recurrent stepper used for autoregressive evaluation.
struct SequenceStepper {
  std::function<Matrix(std::size_t nodes)> initial_state;
  // (state, input at t_k, graph at t_k, gap since previous arrival or 0 for
  // the first one) -> (new state, output)
  std::function<std::pair<Matrix, Matrix>(const Matrix& state, const Matrix& input, const graph::Graph& g,
                                          double gap)>
      step;
};

SequenceStepper make_stepper(const HybridModel& model, const ParameterSet& params, const odeint::SolverConfig& solver);

struct RolloutPrediction {
  // predictions[i] estimates the target channels at stream index
  // target_index[i].
  std::vector<Matrix> predictions;
  std::vector<std::size_t> target_index;
  bool truncated = false;
};

// Consumes stream[start, start + window) with teacher forcing, then
// extrapolates `horizon` arrivals, feeding each prediction back into the
// `target_channels` columns of the next input. Other input columns (time
// features) come from the stream. Stops early at the end of the stream and
// sets `truncated`.
RolloutPrediction rollout_predict(const SequenceStepper& model, const graph::GraphSequence& stream,
                                  std::size_t start, std::size_t window, std::size_t horizon,
                                  const std::vector<Index>& target_channels);

}  // namespace gde::hybrid

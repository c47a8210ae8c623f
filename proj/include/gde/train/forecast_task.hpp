#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <tuple>
#include <vector>

#include "gde/hybrid/hybrid.hpp"
#include "gde/io/sequence.hpp"
#include "gde/train/optim.hpp"

namespace gde::train {

enum class ForecastModelKind { gru, gcgru, gcde_gru };

ForecastModelKind parse_forecast_model(std::string_view name);
std::string_view to_string(ForecastModelKind kind);

struct ForecastModelConfig {
  ad::Index gru_hidden = 50;
  ad::Index gcgru_hidden = 46;
  ad::Index head_hidden = 32;
  // Flow field of the GCDE-GRU: GCN tanh layer, then a linear GCN layer.
  std::vector<fields::LayerSpec> flow;
  odeint::SolverConfig solver;
  double time_scale = 1.0;
};

// GRU: per-node dense GRU with a 2-layer head. GCGRU: graph-convolutional
// GRU jump only. GCDE-GRU: GCGRU jump plus a GCDE flow between arrivals.
struct ForecastModel {
  ForecastModelKind kind = ForecastModelKind::gcde_gru;
  hybrid::HybridModel hybrid;
  hybrid::GRUCell gru;
  fields::OutputHead gru_head;
  odeint::SolverConfig solver;

  // The discrete baselines see the gap to the previous arrival as an extra
  // input column.
  bool uses_delta_feature() const { return kind != ForecastModelKind::gcde_gru; }

  static ForecastModel create(ForecastModelKind kind, ad::Index input_width, ad::Index output_width,
                              const ForecastModelConfig& cfg, ad::ParameterSet& params, std::mt19937_64& rng);

  // Output after each arrival of the stream; nfe accumulates flow evaluations.
  std::vector<ad::Tensor> forward(const ad::Binding& b, const graph::GraphSequence& stream, long* nfe) const;
  hybrid::SequenceStepper stepper(const ad::ParameterSet& params) const;
};

struct ForecastTrainConfig {
  int epochs = 50;
  std::size_t window = 5;
  std::size_t batch_size = 16;
  // Fraction of the arrivals used for training; the rest is the test split.
  double train_fraction = 0.7;
  AdamConfig adam{0.01, 0.9, 0.999, 1e-8, 0.0};
  ScheduleKind schedule = ScheduleKind::cosine_annealing;
  int t0 = 10;
  std::uint64_t seed = 0;
};

struct ForecastEpoch {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  long nfe = 0;
};

struct ForecastRun {
  ForecastModel model;
  ad::ParameterSet params;
  std::vector<ForecastEpoch> curve;
};

// Prepares the model's view of a dataset (delta feature for baselines).
io::TemporalDataset model_view(const ForecastModel& model, const io::TemporalDataset& data);

// `data` must already be in the model's view.
ForecastRun train_forecast_model(ForecastModel model, ad::ParameterSet params, const io::TemporalDataset& data,
                                 const ForecastTrainConfig& cfg,
                                 const std::function<void(const ForecastEpoch&)>& on_epoch = {});

struct ForecastScore {
  std::size_t horizon = 0;
  double mape = 0.0;
  double mape_abs = 0.0;
  double rmse = 0.0;
  std::size_t windows = 0;
  // k (stream index), node, channel value target, prediction
  std::vector<std::tuple<std::size_t, std::size_t, double, double>> rows;
};

// Sliding windows over the test split: consume `window` arrivals, then
// predict `horizon` arrivals autoregressively. The metrics use the last
// prediction of each window. Windows that would run past the end are
// skipped.
ForecastScore eval_forecast(const ForecastModel& model, const ad::ParameterSet& params,
                            const io::TemporalDataset& data, std::size_t first_test, std::size_t window,
                            std::size_t horizon);

std::size_t train_split_end(std::size_t length, double train_fraction);

}  // namespace gde::train

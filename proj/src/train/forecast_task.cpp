#include "gde/train/forecast_task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gde/errors.hpp"
#include "gde/train/metrics.hpp"

namespace gde::train {

ForecastModelKind parse_forecast_model(std::string_view name) {
  if (name == "gru") return ForecastModelKind::gru;
  if (name == "gcgru") return ForecastModelKind::gcgru;
  if (name == "gcde-gru") return ForecastModelKind::gcde_gru;
  throw ConfigError("unknown forecasting model '" + std::string(name) + "'");
}

std::string_view to_string(ForecastModelKind kind) {
  switch (kind) {
    case ForecastModelKind::gru: return "gru";
    case ForecastModelKind::gcgru: return "gcgru";
    case ForecastModelKind::gcde_gru: return "gcde-gru";
  }
  return "gru";
}

ForecastModel ForecastModel::create(ForecastModelKind kind, ad::Index input_width, ad::Index output_width,
                                    const ForecastModelConfig& cfg, ad::ParameterSet& params,
                                    std::mt19937_64& rng) {
  ForecastModel m;
  m.kind = kind;
  m.solver = cfg.solver;
  const ad::Index in = input_width + (m.uses_delta_feature() ? 1 : 0);
  if (kind == ForecastModelKind::gru) {
    m.gru = hybrid::GRUCell::create(params, "gru", in, cfg.gru_hidden, rng);
    m.gru_head = fields::OutputHead::two_layer(params, "head", cfg.gru_hidden, cfg.head_hidden, output_width,
                                               ad::Activation::relu, rng);
    return m;
  }
  std::vector<fields::LayerSpec> flow;
  if (kind == ForecastModelKind::gcde_gru) {
    flow = cfg.flow;
    if (flow.empty()) flow = {{cfg.gcgru_hidden, ad::Activation::tanh}, {cfg.gcgru_hidden, ad::Activation::none}};
  }
  m.hybrid = hybrid::HybridModel::create(params, in, cfg.gcgru_hidden, cfg.head_hidden, output_width, flow, rng);
  m.hybrid.time_scale = cfg.time_scale;
  return m;
}

std::vector<ad::Tensor> ForecastModel::forward(const ad::Binding& b, const graph::GraphSequence& stream,
                                               long* nfe) const {
  if (kind != ForecastModelKind::gru) {
    auto traj = hybrid::hybrid_forward(hybrid, b, stream, solver);
    if (nfe) *nfe += traj.nfe;
    return traj.outputs;
  }
  ad::Tape& tape = b.tape();
  const auto n = static_cast<ad::Index>(stream.graphs.front().size());
  ad::Tensor h = tape.constant(ad::Matrix::Zero(n, gru.hidden_width));
  std::vector<ad::Tensor> out;
  for (std::size_t k = 0; k < stream.size(); ++k) {
    h = gru(h, tape.constant(stream.features[k]), b);
    out.push_back(gru_head(b, h));
  }
  return out;
}

hybrid::SequenceStepper ForecastModel::stepper(const ad::ParameterSet& params) const {
  if (kind != ForecastModelKind::gru) return hybrid::make_stepper(hybrid, params, solver);
  hybrid::SequenceStepper s;
  const ad::Index hidden = gru.hidden_width;
  s.initial_state = [hidden](std::size_t nodes) { return ad::Matrix::Zero(static_cast<ad::Index>(nodes), hidden); };
  s.step = [this, &params](const ad::Matrix& state, const ad::Matrix& input, const graph::Graph&, double) {
    ad::Tape tape;
    ad::Binding b(tape, params, false);
    const ad::Tensor h = gru(tape.constant(state), tape.constant(input), b);
    return std::make_pair(h.value(), gru_head(b, h).value());
  };
  return s;
}

io::TemporalDataset model_view(const ForecastModel& model, const io::TemporalDataset& data) {
  return model.uses_delta_feature() ? io::with_delta_feature(data) : data;
}

std::size_t train_split_end(std::size_t length, double train_fraction) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");
  return static_cast<std::size_t>(std::floor(static_cast<double>(length) * train_fraction));
}

namespace {

graph::GraphSequence slice(const graph::GraphSequence& s, std::size_t begin, std::size_t count) {
  graph::GraphSequence out;
  for (std::size_t k = begin; k < begin + count; ++k) {
    out.timestamps.push_back(s.timestamps[k]);
    out.graphs.push_back(s.graphs[k]);
    out.features.push_back(s.features[k]);
  }
  return out;
}

ad::Matrix target_columns(const ad::Matrix& x, const std::vector<ad::Index>& channels) {
  ad::Matrix y(x.rows(), static_cast<ad::Index>(channels.size()));
  for (std::size_t c = 0; c < channels.size(); ++c) y.col(static_cast<ad::Index>(c)) = x.col(channels[c]);
  return y;
}

}  // namespace

ForecastRun train_forecast_model(ForecastModel model, ad::ParameterSet params, const io::TemporalDataset& data,
                                 const ForecastTrainConfig& cfg,
                                 const std::function<void(const ForecastEpoch&)>& on_epoch) {
  data.validate();
  if (cfg.window < 1) throw ConfigError("window must be at least 1");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  const std::size_t end = train_split_end(data.size(), cfg.train_fraction);
  if (end < cfg.window + 1) throw ConfigError("training split is shorter than one window plus a target");

  std::vector<std::size_t> starts(end - cfg.window);
  std::iota(starts.begin(), starts.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0xf0ca57ULL);
  OptimizerState opt;
  opt.config = cfg.adam;
  const LrSchedule schedule{cfg.schedule, cfg.adam.lr, 0.0, cfg.t0};

  ForecastRun run{std::move(model), std::move(params), {}};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(starts.begin(), starts.end(), rng);
    ForecastEpoch rec;
    rec.epoch = epoch;
    rec.lr = schedule.at(epoch);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < starts.size(); begin += cfg.batch_size) {
      const std::size_t stop = std::min(starts.size(), begin + cfg.batch_size);
      ad::Tape tape;
      ad::Binding b(tape, run.params);
      std::vector<ad::Tensor> losses;
      for (std::size_t i = begin; i < stop; ++i) {
        const std::size_t s = starts[i];
        const auto outputs = run.model.forward(b, slice(data.sequence, s, cfg.window), &rec.nfe);
        const ad::Matrix target = target_columns(data.sequence.features[s + cfg.window], data.target_channels);
        losses.push_back(ad::mse(outputs.back(), tape.constant(target)));
      }
      const std::vector<double> w(losses.size(), 1.0 / static_cast<double>(losses.size()));
      std::vector<ad::Tensor> terms(losses.begin(), losses.end());
      const ad::Tensor loss = ad::lincomb(terms, w);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value))
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      adam_step(run.params, b.collect(tape.backward(loss)), opt, rec.lr);
      loss_sum += value * static_cast<double>(stop - begin);
    }
    rec.loss = loss_sum / static_cast<double>(starts.size());
    run.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return run;
}

ForecastScore eval_forecast(const ForecastModel& model, const ad::ParameterSet& params,
                            const io::TemporalDataset& data, std::size_t first_test, std::size_t window,
                            std::size_t horizon) {
  if (horizon < 1) throw ContractError("eval_forecast: horizon must be at least 1");
  const auto stepper = model.stepper(params);
  ForecastScore score;
  score.horizon = horizon;
  std::vector<ad::Matrix> targets;
  std::vector<ad::Matrix> preds;
  for (std::size_t s = first_test; s + window + horizon <= data.size(); ++s) {
    auto r = hybrid::rollout_predict(stepper, data.sequence, s, window, horizon, data.target_channels);
    const std::size_t k = r.target_index.back();
    const ad::Matrix target = target_columns(data.sequence.features[k], data.target_channels);
    const ad::Matrix& pred = r.predictions.back();
    for (ad::Index i = 0; i < target.rows(); ++i)
      for (ad::Index c = 0; c < target.cols(); ++c)
        score.rows.emplace_back(k, static_cast<std::size_t>(i), target(i, c), pred(i, c));
    targets.push_back(target);
    preds.push_back(pred);
  }
  if (targets.empty()) throw ContractError("eval_forecast: test split too short for one window");
  score.windows = targets.size();
  score.mape = mape(targets, preds);
  score.mape_abs = mape_abs(targets, preds);
  score.rmse = rmse(targets, preds);
  return score;
}

}  // namespace gde::train

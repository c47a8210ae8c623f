#include "gde/train/node_task.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gde/errors.hpp"
#include "gde/train/evaluation.hpp"

namespace gde::train {

NodeModelKind parse_node_model(std::string_view name) {
  if (name == "gcn") return NodeModelKind::gcn;
  if (name == "gcde-rk2") return NodeModelKind::gcde_rk2;
  if (name == "gcde-rk4") return NodeModelKind::gcde_rk4;
  if (name == "gcde-dpr5" || name == "gcde-dopri5") return NodeModelKind::gcde_dopri5;
  throw ConfigError("unknown node classification model '" + std::string(name) + "'");
}

std::string_view to_string(NodeModelKind kind) {
  switch (kind) {
    case NodeModelKind::gcn: return "gcn";
    case NodeModelKind::gcde_rk2: return "gcde-rk2";
    case NodeModelKind::gcde_rk4: return "gcde-rk4";
    case NodeModelKind::gcde_dopri5: return "gcde-dpr5";
  }
  return "gcn";
}

NodeModel NodeModel::create(NodeModelKind kind, ad::Index in, ad::Index classes, const NodeModelConfig& cfg,
                            ad::ParameterSet& params, std::mt19937_64& rng) {
  using ad::Activation;
  NodeModel m;
  m.kind = kind;
  m.solver = cfg.solver;
  m.input = fields::GCNLayer::create(params, "gcn_in", in, cfg.hidden, Activation::relu, true, cfg.input_dropout, rng);
  if (kind != NodeModelKind::gcn) {
    std::vector<fields::LayerSpec> specs = cfg.field;
    if (specs.empty()) {
      specs = {{cfg.hidden, Activation::softplus}};
      if (kind != NodeModelKind::gcde_dopri5) specs.push_back({cfg.hidden, Activation::none});
    }
    m.field = fields::GCDEField::create(params, "field", cfg.hidden, specs, true, cfg.field_dropout, rng);
    switch (kind) {
      case NodeModelKind::gcde_rk2: m.solver.scheme = odeint::Scheme::rk2; break;
      case NodeModelKind::gcde_rk4: m.solver.scheme = odeint::Scheme::rk4; break;
      default: m.solver.scheme = odeint::Scheme::dopri5; break;
    }
  }
  m.output = fields::GCNLayer::create(params, "gcn_out", cfg.hidden, classes, Activation::none, true, 0.0, rng);
  return m;
}

NodeModel::Output NodeModel::forward(const ad::Binding& b, const fields::GraphOperator& op, const ad::Matrix& x,
                                     std::mt19937_64* rng) const {
  ad::Tape& tape = b.tape();
  const ad::Index n = x.rows();
  Output out;
  std::optional<ad::Matrix> in_mask;
  if (rng && input.dropout > 0.0) in_mask = fields::sample_dropout_mask(n, input.in, input.dropout, *rng);
  ad::Tensor h = input.forward(b, op, tape.constant(x), in_mask ? &*in_mask : nullptr);
  if (field) {
    fields::DropoutMasks masks;
    if (rng) masks = fields::sample_dropout_masks(field->layers, n, *rng);
    auto res = odeint::solve(field->bind(b, op, rng ? &masks : nullptr), h, solver);
    h = res.final_state;
    out.nfe = res.nfe;
  }
  out.logits = output.forward(b, op, h);
  return out;
}

ad::Matrix NodeModel::predict(const ad::ParameterSet& params, const fields::GraphOperator& op,
                              const ad::Matrix& x) const {
  ad::Tape tape;
  ad::Binding b(tape, params, false);
  return forward(b, op, x, nullptr).logits.value();
}

NodeRun train_node_model(NodeModel model, ad::ParameterSet params, const io::StaticDataset& data,
                         const NodeTrainConfig& cfg, const std::function<void(const NodeEpoch&)>& on_epoch) {
  data.validate();
  if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
  const auto op = graph::normalize(data.graph).as_operator();
  std::mt19937_64 rng(cfg.seed ^ 0xd20fULL);
  OptimizerState opt;
  opt.config = cfg.adam;
  const int select_from = cfg.select_from >= 0 ? cfg.select_from : cfg.epochs / 2;

  NodeRun run{model, params, -1, {}, 0.0, 0.0};
  double best = std::numeric_limits<double>::infinity();
  long nfe_total = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    NodeEpoch rec;
    rec.epoch = epoch;
    {
      ad::Tape tape;
      ad::Binding b(tape, params);
      auto out = model.forward(b, op, data.features, &rng);
      const ad::Tensor loss = ad::softmax_cross_entropy(out.logits, data.labels, data.train_mask);
      rec.train_loss = loss.value()(0, 0);
      if (!std::isfinite(rec.train_loss))
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      rec.nfe = out.nfe;
      nfe_total += out.nfe;
      adam_step(params, b.collect(tape.backward(loss)), opt);
    }
    {
      ad::Tape tape;
      ad::Binding b(tape, params, false);
      const ad::Tensor logits = model.forward(b, op, data.features, nullptr).logits;
      rec.val_loss = ad::softmax_cross_entropy(logits, data.labels, data.val_mask).value()(0, 0);
      rec.val_accuracy = eval_node_classification(logits.value(), data.labels, data.val_mask);
    }
    if (epoch >= select_from && rec.val_loss < best) {
      best = rec.val_loss;
      run.params = params;
      run.selected_epoch = epoch;
    }
    run.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (run.selected_epoch < 0) run.params = params;
  run.mean_nfe = cfg.epochs > 0 ? static_cast<double>(nfe_total) / cfg.epochs : 0.0;
  run.test_accuracy =
      eval_node_classification(model.predict(run.params, op, data.features), data.labels, data.test_mask);
  return run;
}

}  // namespace gde::train

#include "gde/hybrid/hybrid.hpp"

#include "gde/errors.hpp"

namespace gde::hybrid {

GCGRUCell GCGRUCell::create(ParameterSet& params, const std::string& name, Index input_width, Index hidden_width,
                            std::mt19937_64& rng) {
  GCGRUCell c;
  c.input_width = input_width;
  c.hidden_width = hidden_width;
  c.xz = name + ".xz";
  c.hz = name + ".hz";
  c.xr = name + ".xr";
  c.hr = name + ".hr";
  c.xh = name + ".xh";
  c.hh = name + ".hh";
  for (const auto* w : {&c.xz, &c.xr, &c.xh}) params.add_glorot(*w, input_width, hidden_width, rng);
  for (const auto* w : {&c.hz, &c.hr, &c.hh}) params.add_glorot(*w, hidden_width, hidden_width, rng);
  return c;
}

Tensor gcgru_jump(const Tensor& h, const Tensor& x, const GraphOperator& laplacian, const GCGRUCell& cell,
                  const Binding& b) {
  if (h.cols() != cell.hidden_width || x.cols() != cell.input_width || h.rows() != x.rows())
    throw ShapeError("GCGRU jump: state " + ad::shape_string(h.value()) + ", input " + ad::shape_string(x.value()) +
                     " for a cell of input width " + std::to_string(cell.input_width) + " and hidden width " +
                     std::to_string(cell.hidden_width));
  const Tensor lx = ad::propagate(laplacian, x);
  const Tensor lh = ad::propagate(laplacian, h);
  const Tensor z = ad::sigmoid(ad::add(ad::matmul(lx, b[cell.xz]), ad::matmul(lh, b[cell.hz])));
  const Tensor r = ad::sigmoid(ad::add(ad::matmul(lx, b[cell.xr]), ad::matmul(lh, b[cell.hr])));
  const Tensor lrh = ad::propagate(laplacian, ad::hadamard(r, h));
  const Tensor cand = ad::tanh(ad::add(ad::matmul(lx, b[cell.xh]), ad::matmul(lrh, b[cell.hh])));
  return ad::add(ad::hadamard(z, h), ad::hadamard(ad::one_minus(z), cand));
}

Tensor gcgru_jump(const Tensor& h, const Tensor& x, const graph::NormalizedAdjacency& laplacian,
                  const GCGRUCell& cell, const Binding& b) {
  return gcgru_jump(h, x, laplacian.as_operator(), cell, b);
}

GRUCell GRUCell::create(ParameterSet& params, const std::string& name, Index input_width, Index hidden_width,
                        std::mt19937_64& rng) {
  GRUCell c;
  c.input_width = input_width;
  c.hidden_width = hidden_width;
  c.xz = name + ".xz";
  c.hz = name + ".hz";
  c.bz = name + ".bz";
  c.xr = name + ".xr";
  c.hr = name + ".hr";
  c.br = name + ".br";
  c.xh = name + ".xh";
  c.hh = name + ".hh";
  c.bh = name + ".bh";
  for (const auto* w : {&c.xz, &c.xr, &c.xh}) params.add_glorot(*w, input_width, hidden_width, rng);
  for (const auto* w : {&c.hz, &c.hr, &c.hh}) params.add_glorot(*w, hidden_width, hidden_width, rng);
  for (const auto* w : {&c.bz, &c.br, &c.bh}) params.add_zeros(*w, 1, hidden_width);
  return c;
}

Tensor GRUCell::operator()(const Tensor& h, const Tensor& x, const Binding& b) const {
  if (h.cols() != hidden_width || x.cols() != input_width || h.rows() != x.rows())
    throw ShapeError("GRU cell: state " + ad::shape_string(h.value()) + ", input " + ad::shape_string(x.value()));
  auto gate = [&](const std::string& wx, const std::string& wh, const std::string& bias, const Tensor& hh) {
    return ad::add_bias(ad::add(ad::matmul(x, b[wx]), ad::matmul(hh, b[wh])), b[bias]);
  };
  const Tensor z = ad::sigmoid(gate(xz, hz, bz, h));
  const Tensor r = ad::sigmoid(gate(xr, hr, br, h));
  const Tensor cand = ad::tanh(gate(xh, hh, bh, ad::hadamard(r, h)));
  return ad::add(ad::hadamard(z, h), ad::hadamard(ad::one_minus(z), cand));
}

void HybridSchedule::validate() const {
  if (window < 1) throw ContractError("hybrid schedule: window must be at least 1");
  for (std::size_t k = 1; k < arrival_times.size(); ++k)
    if (!(arrival_times[k] > arrival_times[k - 1]))
      throw ContractError("hybrid schedule: arrival times must strictly increase (index " + std::to_string(k) + ")");
}

HybridModel HybridModel::create(ParameterSet& params, Index input_width, Index hidden_width, Index head_hidden,
                                Index output_width, const std::vector<fields::LayerSpec>& flow_specs,
                                std::mt19937_64& rng) {
  HybridModel m;
  if (!flow_specs.empty())
    m.flow = fields::GCDEField::create(params, "flow", hidden_width, flow_specs, true, 0.0, rng);
  m.cell = GCGRUCell::create(params, "jump", input_width, hidden_width, rng);
  m.head = fields::OutputHead::two_layer(params, "head", hidden_width, head_hidden, output_width,
                                         ad::Activation::relu, rng);
  return m;
}

HybridTrajectory hybrid_forward(const HybridModel& model, const Binding& b, const graph::GraphSequence& stream,
                                const odeint::SolverConfig& solver,
                                const std::function<fields::VectorField(std::size_t k)>& flow_for_segment) {
  stream.validate();
  if (stream.size() == 0) throw ContractError("hybrid_forward: empty stream");
  ad::Tape& tape = b.tape();
  HybridTrajectory out;
  const auto n = static_cast<Index>(stream.graphs.front().size());
  Tensor h = tape.constant(Matrix::Zero(n, model.cell.hidden_width));
  for (std::size_t k = 0; k < stream.size(); ++k) {
    const GraphOperator op = graph::normalize(stream.graphs[k]).as_operator();
    if (k > 0 && flow_for_segment) {
      odeint::SolverConfig cfg = solver;
      cfg.s0 = 0.0;
      cfg.s1 = (stream.timestamps[k] - stream.timestamps[k - 1]) * model.time_scale;
      try {
        out.segments.push_back(odeint::solve(flow_for_segment(k), h, cfg));
      } catch (const DivergenceError& e) {
        throw DivergenceError("segment " + std::to_string(k) + ": " + e.what(), out.nfe + e.nfe());
      } catch (const NumericalError& e) {
        throw NumericalError("segment " + std::to_string(k) + ": " + e.what());
      }
      out.nfe += out.segments.back().nfe;
      h = out.segments.back().final_state;
    } else {
      out.segments.emplace_back();
      out.segments.back().final_state = h;
    }
    out.pre_jump.push_back(h);
    h = gcgru_jump(h, tape.constant(stream.features[k]), op, model.cell, b);
    out.post_jump.push_back(h);
    out.outputs.push_back(model.head(b, h));
  }
  return out;
}

HybridTrajectory hybrid_forward(const HybridModel& model, const Binding& b, const graph::GraphSequence& stream,
                                const odeint::SolverConfig& solver) {
  std::function<fields::VectorField(std::size_t)> flow;
  if (model.flow) {
    flow = [&model, &b, &stream](std::size_t k) {
      return model.flow->bind(b, graph::normalize(stream.graphs[k]).as_operator());
    };
  }
  return hybrid_forward(model, b, stream, solver, flow);
}

SequenceStepper make_stepper(const HybridModel& model, const ParameterSet& params,
                             const odeint::SolverConfig& solver) {
  SequenceStepper s;
  const Index hidden = model.cell.hidden_width;
  s.initial_state = [hidden](std::size_t nodes) { return Matrix::Zero(static_cast<Index>(nodes), hidden); };
  s.step = [&model, &params, solver](const Matrix& state, const Matrix& input, const graph::Graph& g, double gap) {
    ad::Tape tape;
    Binding b(tape, params, false);
    const GraphOperator op = graph::normalize(g).as_operator();
    Tensor h = tape.constant(state);
    if (model.flow && gap > 0.0) {
      odeint::SolverConfig cfg = solver;
      cfg.s0 = 0.0;
      cfg.s1 = gap * model.time_scale;
      h = odeint::solve(model.flow->bind(b, op), h, cfg).final_state;
    }
    h = gcgru_jump(h, tape.constant(input), op, model.cell, b);
    Tensor y = model.head(b, h);
    return std::make_pair(h.value(), y.value());
  };
  return s;
}

RolloutPrediction rollout_predict(const SequenceStepper& model, const graph::GraphSequence& stream,
                                  std::size_t start, std::size_t window, std::size_t horizon,
                                  const std::vector<Index>& target_channels) {
  if (horizon < 1) throw ContractError("rollout_predict: horizon must be at least 1");
  if (window < 1) throw ContractError("rollout_predict: window must be at least 1");
  if (start + window > stream.size())
    throw ContractError("rollout_predict: seed window runs past the end of the stream");
  RolloutPrediction out;
  Matrix state = model.initial_state(stream.graphs[start].size());
  Matrix y;
  for (std::size_t k = start; k < start + window; ++k) {
    const double gap = k == start ? 0.0 : stream.timestamps[k] - stream.timestamps[k - 1];
    std::tie(state, y) = model.step(state, stream.features[k], stream.graphs[k], gap);
  }
  for (std::size_t i = 0; i < horizon; ++i) {
    const std::size_t target = start + window + i;
    if (target >= stream.size()) {
      out.truncated = true;
      break;
    }
    out.predictions.push_back(y);
    out.target_index.push_back(target);
    if (i + 1 == horizon) break;
    Matrix input = stream.features[target];
    if (y.cols() != static_cast<Index>(target_channels.size()))
      throw ShapeError("rollout_predict: model emits " + std::to_string(y.cols()) + " channels, " +
                       std::to_string(target_channels.size()) + " target channels configured");
    for (std::size_t c = 0; c < target_channels.size(); ++c) input.col(target_channels[c]) = y.col(static_cast<Index>(c));
    std::tie(state, y) = model.step(state, input, stream.graphs[target],
                                    stream.timestamps[target] - stream.timestamps[target - 1]);
  }
  return out;
}

}  // namespace gde::hybrid

#include "gde/train/particle_models.hpp"

#include "gde/errors.hpp"

namespace gde::train {

ParticleModelKind parse_particle_model(std::string_view name) {
  if (name == "static-baseline" || name == "static") return ParticleModelKind::static_mlp;
  if (name == "node-baseline" || name == "neural-ode") return ParticleModelKind::neural_ode;
  if (name == "gcde" || name == "gcde-rk2" || name == "gcde-rk4" || name == "gcde-dpr5") return ParticleModelKind::gcde;
  if (name == "gcde2") return ParticleModelKind::gcde2;
  throw ConfigError("model '" + std::string(name) + "' is not available for the particles task");
}

std::string_view to_string(ParticleModelKind kind) {
  switch (kind) {
    case ParticleModelKind::static_mlp: return "static-baseline";
    case ParticleModelKind::neural_ode: return "node-baseline";
    case ParticleModelKind::gcde: return "gcde";
    case ParticleModelKind::gcde2: return "gcde2";
  }
  return "gcde";
}

ParticleModel ParticleModel::create(ParticleModelKind kind, Index nodes, double step, odeint::SolverConfig solver,
                                    ParameterSet& params, std::mt19937_64& rng) {
  using ad::Activation;
  ParticleModel m;
  m.kind = kind;
  m.nodes = nodes;
  m.solver = solver;
  m.solver.s0 = 0.0;
  m.solver.s1 = step;
  switch (kind) {
    case ParticleModelKind::static_mlp:
    case ParticleModelKind::neural_ode: {
      const Activation act = kind == ParticleModelKind::static_mlp ? Activation::relu : Activation::softplus;
      const Index w = 4 * nodes;
      m.mlp.push_back(fields::DenseLayer::create(params, "mlp.0", w, 2 * w, act, true, rng));
      m.mlp.push_back(fields::DenseLayer::create(params, "mlp.1", 2 * w, 2 * w, act, true, rng));
      m.mlp.push_back(fields::DenseLayer::create(params, "mlp.2", 2 * w, w, Activation::none, true, rng));
      break;
    }
    case ParticleModelKind::gcde:
      m.gcn.push_back(fields::GCNLayer::create(params, "field.0", 4, 16, Activation::softplus, true, 0.0, rng));
      m.gcn.push_back(fields::GCNLayer::create(params, "field.1", 16, 16, Activation::softplus, true, 0.0, rng));
      m.gcn.push_back(fields::GCNLayer::create(params, "field.2", 16, 4, Activation::none, true, 0.0, rng));
      break;
    case ParticleModelKind::gcde2:
      m.augment = 2;
      m.gcn.push_back(fields::GCNLayer::create(params, "accel.0", 8, 32, Activation::softplus, true, 0.0, rng));
      m.gcn.push_back(fields::GCNLayer::create(params, "accel.1", 32, 32, Activation::softplus, true, 0.0, rng));
      m.gcn.push_back(fields::GCNLayer::create(params, "accel.2", 32, 4, Activation::none, true, 0.0, rng));
      break;
  }
  return m;
}

ParticleModel::Output ParticleModel::forward(const Binding& b, const Tensor& inputs, const GraphOperator& op) const {
  if (inputs.cols() != 4 || inputs.rows() % nodes != 0)
    throw ShapeError("particle model: inputs " + ad::shape_string(inputs.value()) + " are not a batch of " +
                     std::to_string(nodes) + "x4 states");
  const Index batch = inputs.rows() / nodes;
  auto flat_mlp = [this, &b, batch](const Tensor& x) {
    Tensor y = fields::dense_stack(mlp, b, ad::reshape(x, batch, 4 * nodes));
    return ad::reshape(y, batch * nodes, 4);
  };
  Output out;
  switch (kind) {
    case ParticleModelKind::static_mlp:
      out.prediction = flat_mlp(inputs);
      break;
    case ParticleModelKind::neural_ode: {
      auto r = odeint::solve([&](double, const Tensor& h) { return flat_mlp(h); }, inputs, solver);
      out.prediction = r.final_state;
      out.nfe = r.nfe;
      break;
    }
    case ParticleModelKind::gcde: {
      auto r = odeint::solve([&](double, const Tensor& h) { return fields::gcn_stack(gcn, b, op, h); }, inputs, solver);
      out.prediction = r.final_state;
      out.nfe = r.nfe;
      break;
    }
    case ParticleModelKind::gcde2: {
      ad::Tape& tape = inputs.tape();
      const Tensor zeros = tape.constant(Matrix::Zero(inputs.rows(), augment));
      const Tensor pos = ad::concat_cols(ad::slice_cols(inputs, 0, 2), zeros);
      const Tensor vel = ad::concat_cols(ad::slice_cols(inputs, 2, 2), zeros);
      const Index half = 2 + augment;
      fields::SecondOrderField f(
          [&](double, const Tensor& state) { return fields::gcn_stack(gcn, b, op, state); }, half);
      auto r = odeint::solve(f.as_field(), ad::concat_cols(pos, vel), solver);
      out.prediction =
          ad::concat_cols(ad::slice_cols(r.final_state, 0, 2), ad::slice_cols(r.final_state, half, 2));
      out.nfe = r.nfe;
      break;
    }
  }
  return out;
}

Matrix ParticleModel::predict(const ParameterSet& params, const Matrix& inputs, const GraphOperator& op) const {
  ad::Tape tape;
  Binding b(tape, params, false);
  return forward(b, tape.constant(inputs), op).prediction.value();
}

}  // namespace gde::train

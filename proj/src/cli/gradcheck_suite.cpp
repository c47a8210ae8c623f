#include "gde/cli/gradcheck_suite.hpp"

#include <memory>
#include <random>

#include "gde/fields/fields.hpp"
#include "gde/hybrid/hybrid.hpp"
#include "gde/odeint/odeint.hpp"
#include "gde/train/particle_models.hpp"

namespace gde::cli {

using ad::Binding;
using ad::Index;
using ad::Matrix;
using ad::ParameterSet;
using ad::Tensor;

ad::Tensor corrupted_square(const ad::Tensor& x) {
  return x.tape().record("corrupted_square", x.value().array().square().matrix(), {x},
                         [](const ad::Tape& tape, const ad::Node& self, const Matrix& g, std::span<Matrix* const> in) {
                           if (in[0]) *in[0] += 2.2 * g.cwiseProduct(tape.value(self.inputs[0]));
                         });
}

namespace {

constexpr double kOpTol = 1e-4;
constexpr double kUnrollTol = 1e-3;

struct Suite {
  std::mt19937_64 rng;
  std::vector<ad::GradcheckResult> results;

  Matrix uniform(Index r, Index c, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  }

  // Entries bounded away from zero so kinked activations stay differentiable.
  Matrix away_from_zero(Index r, Index c) {
    Matrix m = uniform(r, c, 0.1, 1.0);
    std::bernoulli_distribution sign(0.5);
    for (Index i = 0; i < m.size(); ++i)
      if (sign(rng)) m.data()[i] = -m.data()[i];
    return m;
  }

  // Scalar readout <out, W> with a fixed random weight.
  Tensor project(const Tensor& out, const std::shared_ptr<Matrix>& w) {
    return ad::sum(ad::hadamard(out, out.tape().constant(*w)));
  }

  std::shared_ptr<Matrix> weight(Index r, Index c) { return std::make_shared<Matrix>(uniform(r, c)); }

  void check(const std::string& name, const ParameterSet& params, const ad::LossBuilder& loss, double tol) {
    results.push_back(ad::gradcheck(name, params, loss, tol));
  }

  // Unary op over a 3x4 input.
  template <typename F>
  void unary(const std::string& name, F f, bool kink = false) {
    ParameterSet p;
    p.add("a", kink ? away_from_zero(3, 4) : uniform(3, 4));
    Matrix out_shape;
    {
      ad::Tape t;
      Binding b(t, p, false);
      out_shape = f(b["a"]).value();
    }
    auto w = weight(out_shape.rows(), out_shape.cols());
    check(name, p, [=, this](const Binding& b) { return project(f(b["a"]), w); }, kOpTol);
  }

  template <typename F>
  void binary(const std::string& name, Index ar, Index ac, Index br, Index bc, F f) {
    ParameterSet p;
    p.add("a", uniform(ar, ac));
    p.add("b", uniform(br, bc));
    Matrix out_shape;
    {
      ad::Tape t;
      Binding b(t, p, false);
      out_shape = f(b["a"], b["b"]).value();
    }
    auto w = weight(out_shape.rows(), out_shape.cols());
    check(name, p, [=, this](const Binding& b) { return project(f(b["a"], b["b"]), w); }, kOpTol);
  }
};

graph::Graph small_graph() { return graph::Graph::undirected(4, {{0, 1}, {1, 2}, {2, 3}, {0, 2}}); }

}  // namespace

std::vector<ad::GradcheckResult> run_gradcheck_suite(const GradcheckOptions& opts) {
  Suite s{std::mt19937_64(opts.seed), {}};

  // Primitive operations.
  s.binary("matmul", 3, 4, 4, 2, [](const Tensor& a, const Tensor& b) { return ad::matmul(a, b); });
  s.binary("add", 3, 4, 3, 4, [](const Tensor& a, const Tensor& b) { return ad::add(a, b); });
  s.binary("sub", 3, 4, 3, 4, [](const Tensor& a, const Tensor& b) { return ad::sub(a, b); });
  s.binary("hadamard", 3, 4, 3, 4, [](const Tensor& a, const Tensor& b) { return ad::hadamard(a, b); });
  s.binary("add_bias", 3, 4, 1, 4, [](const Tensor& a, const Tensor& b) { return ad::add_bias(a, b); });
  s.binary("concat_cols", 3, 2, 3, 3, [](const Tensor& a, const Tensor& b) { return ad::concat_cols(a, b); });
  s.binary("outer_sum", 4, 1, 4, 1, [](const Tensor& a, const Tensor& b) { return ad::outer_sum(a, b); });
  s.binary("mse", 3, 4, 3, 4, [](const Tensor& a, const Tensor& b) { return ad::mse(a, b); });
  s.binary("lincomb", 3, 4, 3, 4, [](const Tensor& a, const Tensor& b) {
    const std::vector<Tensor> t{a, b, a};
    const std::vector<double> c{0.5, -1.5, 2.0};
    return ad::lincomb(t, c);
  });
  s.unary("scale", [](const Tensor& a) { return ad::scale(a, -1.7); });
  s.unary("one_minus", [](const Tensor& a) { return ad::one_minus(a); });
  s.unary("sigmoid", [](const Tensor& a) { return ad::sigmoid(a); });
  s.unary("tanh", [](const Tensor& a) { return ad::tanh(a); });
  s.unary("relu", [](const Tensor& a) { return ad::relu(a); }, true);
  s.unary("softplus", [](const Tensor& a) { return ad::softplus(a); });
  s.unary("leaky_relu", [](const Tensor& a) { return ad::leaky_relu(a, 0.2); }, true);
  s.unary("sum", [](const Tensor& a) { return ad::sum(a); });
  s.unary("mean", [](const Tensor& a) { return ad::mean(a); });
  s.unary("slice_cols", [](const Tensor& a) { return ad::slice_cols(a, 1, 2); });
  s.unary("reshape", [](const Tensor& a) { return ad::reshape(a, 2, 6); });
  {
    auto op = ad::BlockOperator::stack({graph::normalize(graph::Graph::undirected(2, {{0, 1}})).matrix,
                                        s.uniform(1, 1)});
    s.unary("propagate", [op](const Tensor& a) { return ad::propagate(op, a); });
  }
  {
    auto idx = std::make_shared<const std::vector<Index>>(std::vector<Index>{2, 0, 2, 1});
    s.unary("gather_rows", [idx](const Tensor& a) { return ad::gather_rows(a, idx); });
    s.unary("scatter_add_rows", [idx](const Tensor& a) {
      return ad::scatter_add_rows(ad::reshape(a, 4, 3), idx, 5);
    });
  }
  {
    auto mask = std::make_shared<const Matrix>(fields::attention_support(graph::Graph::undirected(3, {{0, 1}})));
    s.unary("masked_softmax_rows", [mask](const Tensor& a) { return ad::masked_softmax_rows(ad::slice_cols(a, 0, 3), mask); });
  }
  {
    const std::vector<int> labels{0, 2, 1};
    const std::vector<char> rows{1, 0, 1};
    ParameterSet p;
    p.add("a", s.uniform(3, 4));
    s.check("softmax_cross_entropy", p,
            [labels, rows](const Binding& b) { return ad::softmax_cross_entropy(b["a"], labels, rows); }, kOpTol);
  }

  const graph::Graph g = small_graph();
  const auto op = graph::normalize(g).as_operator();

  // Fields and heads, differentiated with respect to the state and every
  // parameter.
  {
    ParameterSet p;
    auto field = fields::GCDEField::create(p, "f", 3,
                                           {{5, ad::Activation::softplus}, {3, ad::Activation::tanh}}, true, 0.0,
                                           s.rng);
    p.add("h", s.uniform(4, 3));
    auto w = s.weight(4, 3);
    s.check("gcde_field", p, [&, w](const Binding& b) { return s.project(field(b, op, b["h"]), w); }, kOpTol);

    // Same field with fixed dropout masks.
    auto masks = std::make_shared<fields::DropoutMasks>();
    masks->per_layer = {fields::sample_dropout_mask(4, 3, 0.5, s.rng), fields::sample_dropout_mask(4, 5, 0.5, s.rng)};
    s.check("gcde_field_dropout", p,
            [&, w, masks](const Binding& b) { return s.project(field(b, op, b["h"], masks.get()), w); }, kOpTol);
  }
  {
    ParameterSet p;
    auto field = fields::GMDEField::create(p, "m", 3, 4, ad::Activation::tanh, ad::Activation::none, s.rng);
    p.add("h", s.uniform(4, 3));
    auto w = s.weight(4, 3);
    s.check("gmde_field", p, [&, w](const Binding& b) { return s.project(field(b, g, b["h"]), w); }, kOpTol);
  }
  {
    ParameterSet p;
    auto field = fields::GADEField::create(p, "a", 3, ad::Activation::softplus, s.rng);
    p.add("h", s.uniform(4, 3));
    auto w = s.weight(4, 3);
    s.check("gade_field", p, [&, w](const Binding& b) { return s.project(field(b, g, b["h"]), w); }, kOpTol);
  }
  {
    ParameterSet p;
    auto base = fields::GCDEField::create(p, "acc", 4, {{6, ad::Activation::softplus}, {4, ad::Activation::none}},
                                          true, 0.0, s.rng);
    // Acceleration field reading the full [H | H'] state and emitting width 2.
    p.add("proj", s.uniform(4, 2));
    p.add("state", s.uniform(4, 4));
    auto w = s.weight(4, 4);
    s.check("second_order_field", p,
            [&, w](const Binding& b) {
              const fields::SecondOrderField f(
                  [&](double, const Tensor& x) { return ad::matmul(base(b, op, x), b["proj"]); }, 2);
              return s.project(f(0.0, b["state"]), w);
            },
            kOpTol);
  }
  {
    ParameterSet p;
    auto head = fields::OutputHead::two_layer(p, "k", 3, 5, 2, ad::Activation::tanh, s.rng);
    p.add("h", s.uniform(4, 3));
    auto w = s.weight(4, 2);
    s.check("output_head", p, [&, w](const Binding& b) { return s.project(head(b, b["h"]), w); }, kOpTol);
  }
  {
    ParameterSet p;
    auto cell = hybrid::GCGRUCell::create(p, "c", 2, 3, s.rng);
    p.add("h", s.uniform(4, 3));
    p.add("x", s.uniform(4, 2));
    auto w = s.weight(4, 3);
    s.check("gcgru_cell", p,
            [&, w](const Binding& b) { return s.project(hybrid::gcgru_jump(b["h"], b["x"], op, cell, b), w); },
            kOpTol);
  }
  {
    ParameterSet p;
    auto cell = hybrid::GRUCell::create(p, "r", 2, 3, s.rng);
    for (const auto& name : {cell.bz, cell.br, cell.bh}) p.at(name) = s.uniform(1, 3);
    p.add("h", s.uniform(4, 3));
    p.add("x", s.uniform(4, 2));
    auto w = s.weight(4, 3);
    s.check("gru_cell", p, [&, w](const Binding& b) { return s.project(cell(b["h"], b["x"], b), w); }, kOpTol);
  }

  // Full solver unrolls of a 2-node GCDE.
  {
    const auto op2 = graph::normalize(graph::Graph::undirected(2, {{0, 1}})).as_operator();
    ParameterSet p;
    auto field = fields::GCDEField::create(p, "f", 3, {{4, ad::Activation::softplus}, {3, ad::Activation::none}},
                                           true, 0.0, s.rng);
    p.add("h", s.uniform(2, 3));
    auto w = s.weight(2, 3);
    for (auto scheme : {odeint::Scheme::rk2, odeint::Scheme::rk4, odeint::Scheme::dopri5}) {
      odeint::SolverConfig cfg;
      cfg.scheme = scheme;
      cfg.fixed_steps = 4;
      s.check("solve_" + std::string(odeint::to_string(scheme)), p,
              [&, w, cfg](const Binding& b) {
                return s.project(odeint::solve(field.bind(b, op2), b["h"], cfg).final_state, w);
              },
              kUnrollTol);
    }
  }

  // Hybrid flow / jump / output rollout over three arrivals on a 3-node graph.
  {
    ParameterSet p;
    auto model = hybrid::HybridModel::create(p, 2, 3, 4, 1, {{3, ad::Activation::tanh}, {3, ad::Activation::none}},
                                             s.rng);
    graph::GraphSequence stream;
    for (int k = 0; k < 3; ++k) {
      stream.timestamps.push_back(0.4 * k + 0.1 * k * k);
      stream.graphs.push_back(k == 1 ? graph::Graph::undirected(3, {{0, 1}})
                                     : graph::Graph::undirected(3, {{0, 1}, {1, 2}}));
      stream.features.push_back(s.uniform(3, 2));
    }
    odeint::SolverConfig cfg;
    cfg.scheme = odeint::Scheme::rk4;
    cfg.fixed_steps = 2;
    auto w = s.weight(3, 1);
    s.check("hybrid_rollout_3_jumps", p,
            [&, w, stream, cfg](const Binding& b) {
              auto traj = hybrid::hybrid_forward(model, b, stream, cfg);
              std::vector<Tensor> terms;
              for (const auto& y : traj.outputs) terms.push_back(s.project(y, w));
              const std::vector<double> ones(terms.size(), 1.0);
              return ad::lincomb(terms, ones);
            },
            kUnrollTol);
  }

  // One-step second-order particle model.
  {
    ParameterSet p;
    odeint::SolverConfig cfg;
    auto model = train::ParticleModel::create(train::ParticleModelKind::gcde2, 3, 0.05, cfg, p, s.rng);
    const Matrix x = s.uniform(3, 4);
    const auto op3 = graph::normalize(graph::Graph::undirected(3, {{0, 2}})).as_operator();
    auto w = s.weight(3, 4);
    s.check("particle_gcde2_step", p,
            [&, w, x](const Binding& b) {
              return s.project(model.forward(b, b.tape().constant(x), op3).prediction, w);
            },
            kUnrollTol);
  }

  if (opts.negative_control) {
    ParameterSet p;
    p.add("a", s.uniform(3, 4));
    auto w = s.weight(3, 4);
    s.check("negative_control_corrupted_square", p,
            [&, w](const Binding& b) { return s.project(corrupted_square(b["a"]), w); }, kOpTol);
  }
  return s.results;
}

}  // namespace gde::cli

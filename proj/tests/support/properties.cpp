#include "support/properties.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gde/fields/fields.hpp"
#include "gde/graph/graph.hpp"
#include "gde/odeint/odeint.hpp"
#include "gde/particles/particles.hpp"
#include "gde/train/metrics.hpp"
#include "gde/train/optim.hpp"
#include "support/helpers.hpp"

namespace gde::checks {

using ad::Index;
using ad::Matrix;
using testing::uniform;

namespace {

class Tracker {
 public:
  Tracker(std::string name, double tol) {
    r_.name = std::move(name);
    r_.tolerance = tol;
  }
  // Records one trial with its deviation; tolerance-relative worst case.
  void trial(double deviation, const std::string& what) {
    ++r_.trials;
    record(deviation, what);
  }
  void record(double deviation, const std::string& what) {
    if (!(deviation <= r_.tolerance)) {
      if (r_.detail.empty()) r_.detail = what + " (deviation " + std::to_string(deviation) + ")";
      ++r_.failures;
    }
    if (std::isnan(deviation))
      r_.worst = deviation;
    else
      r_.worst = std::max(r_.worst, deviation);
  }
  PropertyResult result() const { return r_; }

 private:
  PropertyResult r_;
};

graph::Graph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(p);
  std::vector<graph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edge(rng)) edges.emplace_back(i, j);
  return graph::Graph::undirected(n, edges);
}

Matrix permute_rows(const Matrix& h, const std::vector<std::size_t>& perm) {
  Matrix out(h.rows(), h.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Index>(perm[i])) = h.row(static_cast<Index>(i));
  return out;
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

PropertyResult permutation_equivariance(int trials, std::uint64_t seed) {
  Tracker t("permutation equivariance", 1e-10);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> nodes(1, 8);
  std::uniform_int_distribution<Index> widths(1, 4);
  for (int k = 0; k < trials; ++k) {
    const std::size_t n = nodes(rng);
    const Index w = widths(rng);
    const auto g = random_graph(n, 0.4, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto pg = graph::permute(g, perm);
    const Matrix h = uniform(static_cast<Index>(n), w, rng);
    const Matrix ph = permute_rows(h, perm);

    ad::ParameterSet params;
    const auto gcde = fields::GCDEField::create(params, "gcde", w, {{w, ad::Activation::softplus}, {w, ad::Activation::none}},
                                                true, 0.0, rng);
    const auto gmde = fields::GMDEField::create(params, "gmde", w, 3, ad::Activation::tanh, ad::Activation::none, rng);
    const auto gade = fields::GADEField::create(params, "gade", w, ad::Activation::softplus, rng);

    ad::Tape tape;
    ad::Binding b(tape, params, false);
    const auto x = tape.constant(h);
    const auto px = tape.constant(ph);
    const double d_gcde = max_abs(fields::gcde_field(px, graph::normalize(pg), gcde, b).value() -
                                  permute_rows(fields::gcde_field(x, graph::normalize(g), gcde, b).value(), perm));
    const double d_gmde = max_abs(gmde(b, pg, px).value() - permute_rows(gmde(b, g, x).value(), perm));
    const double d_gade = max_abs(gade(b, pg, px).value() - permute_rows(gade(b, g, x).value(), perm));
    const double worst = std::max({d_gcde, d_gmde, d_gade});
    t.trial(worst, "trial " + std::to_string(k) + " n=" + std::to_string(n));
  }
  return t.result();
}

PropertyResult force_antisymmetry(int trials, std::uint64_t seed) {
  Tracker t("force antisymmetry", 1e-12);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-3.0, 3.0);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  std::uniform_real_distribution<double> constant(0.1, 3.0);
  for (int k = 0; k < trials; ++k) {
    const particles::Vec2 xi{pos(rng), pos(rng)}, xj{pos(rng), pos(rng)};
    const particles::Vec2 vi{vel(rng), vel(rng)}, vj{vel(rng), vel(rng)};
    const double a = constant(rng), b = constant(rng), r = constant(rng);
    const auto fij = particles::pair_force(xi, xj, vi, vj, a, b, r);
    const auto fji = particles::pair_force(xj, xi, vj, vi, a, b, r);
    const double dev = std::max(std::abs(fij[0] + fji[0]), std::abs(fij[1] + fji[1]));
    t.trial(dev, "trial " + std::to_string(k));
  }
  return t.result();
}

PropertyResult adjacency_symmetry(int trials, std::uint64_t seed) {
  Tracker t("adjacency symmetry", 1e-12);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> nodes(1, 12);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int k = 0; k < trials; ++k) {
    const auto g = random_graph(nodes(rng), density(rng), rng);
    const Matrix a = graph::adjacency(g);
    const Matrix l = graph::normalize(g).matrix;

    particles::SimConfig sc;
    sc.n = nodes(rng);
    sc.seed = rng();
    const auto state = particles::random_initial_state(sc);
    const Matrix at = graph::adjacency(particles::interaction_graph(state, sc.r));

    const std::string what = "trial " + std::to_string(k);
    const double dev = std::max({max_abs(a - a.transpose()), max_abs(l - l.transpose()), max_abs(at - at.transpose())});
    t.trial(dev, what);
    t.record(max_abs(Matrix(at.diagonal())), what + " interaction graph diagonal");
  }
  return t.result();
}

PropertyResult metric_identities(int trials, std::uint64_t seed) {
  Tracker t("MAPE/RMSE identities", 1e-9);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> dim(1, 5);
  std::uniform_int_distribution<int> steps(1, 6);
  std::uniform_real_distribution<double> magnitude(0.5, 3.0);
  std::uniform_real_distribution<double> factor(0.1, 10.0);
  std::bernoulli_distribution negative(0.5);
  for (int k = 0; k < trials; ++k) {
    const Index rows = dim(rng), cols = dim(rng);
    const int T = steps(rng);
    std::vector<Matrix> y, yhat, ys, yhats;
    const double c = factor(rng);
    for (int s = 0; s < T; ++s) {
      Matrix target(rows, cols);
      for (Index i = 0; i < target.size(); ++i) target.data()[i] = (negative(rng) ? -1.0 : 1.0) * magnitude(rng);
      y.push_back(target);
      yhat.push_back(target + uniform(rows, cols, rng));
      ys.push_back(c * y.back());
      yhats.push_back(c * yhat.back());
    }
    const std::string what = "trial " + std::to_string(k);
    const double mape = train::mape(y, yhat);
    const double mape_abs = train::mape_abs(y, yhat);
    const double rmse = train::rmse(y, yhat);
    t.trial(std::max({-mape, -mape_abs, -rmse, 0.0}), what + " non-negativity");
    t.record(std::abs(train::mape(y, y)) + std::abs(train::rmse(y, y)) + std::abs(train::mape_abs(y, y)),
             what + " zero on perfect predictions");
    t.record(std::abs(train::mape(ys, yhats) - mape) / std::max(1.0, mape), what + " MAPE scale invariance");
    t.record(std::max(0.0, mape - mape_abs) / std::max(1.0, mape_abs), what + " mape <= mape_abs");

    std::vector<Matrix> reversed_y(y.rbegin(), y.rend()), reversed_hat(yhat.rbegin(), yhat.rend());
    t.record(std::abs(train::rmse(reversed_y, reversed_hat) - rmse), what + " RMSE time-order invariance");
    const double mae = (y.front() - yhat.front()).cwiseAbs().mean();
    t.record(std::abs(train::rmse({y.front()}, {yhat.front()}) - mae), what + " RMSE at T=1 equals MAE");
  }
  return t.result();
}

PropertyResult adam_zero_lr_fixpoint(int trials, std::uint64_t seed) {
  Tracker t("Adam zero-lr fixpoint", 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> dim(1, 6);
  std::uniform_int_distribution<int> tensors(1, 4);
  std::uniform_real_distribution<double> decay(0.0, 1e-2);
  for (int k = 0; k < trials; ++k) {
    ad::ParameterSet params;
    const int count = tensors(rng);
    for (int i = 0; i < count; ++i) params.add("p" + std::to_string(i), uniform(dim(rng), dim(rng), rng, -5, 5));
    const ad::ParameterSet before = params;
    train::OptimizerState state;
    state.config.lr = 0.0;
    state.config.weight_decay = (k % 2) ? decay(rng) : 0.0;
    for (int step = 0; step < 5; ++step) {
      train::GradientMap grads;
      for (const auto& [name, value] : params) grads[name] = uniform(value.rows(), value.cols(), rng, -10, 10);
      if (step % 2)
        train::adam_step(params, grads, state, 0.0);
      else
        train::adam_step(params, grads, state);
    }
    t.trial(params == before ? 0.0 : 1.0, "trial " + std::to_string(k));
  }
  return t.result();
}

PropertyResult time_rescaling(int trials, std::uint64_t seed) {
  Tracker t("time rescaling", 1e-8);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> nodes(1, 5);
  std::uniform_int_distribution<Index> widths(1, 3);
  std::uniform_int_distribution<int> steps(1, 8);
  const odeint::Scheme schemes[] = {odeint::Scheme::rk2, odeint::Scheme::rk4, odeint::Scheme::dopri5};
  for (int k = 0; k < trials; ++k) {
    const std::size_t n = nodes(rng);
    const Index w = widths(rng);
    ad::ParameterSet params;
    const auto field =
        fields::GCDEField::create(params, "f", w, {{w, ad::Activation::tanh}, {w, ad::Activation::none}}, true, 0.0, rng);
    const auto op = graph::normalize(random_graph(n, 0.5, rng)).as_operator();
    const Matrix h0 = uniform(static_cast<Index>(n), w, rng);

    odeint::SolverConfig unit;
    unit.scheme = schemes[k % 3];
    unit.fixed_steps = steps(rng);
    unit.rtol = unit.atol = 1e-7;
    odeint::SolverConfig doubled = unit;
    doubled.s1 = 2.0;

    ad::Tape tape;
    ad::Binding b(tape, params, false);
    const auto f = field.bind(b, op);
    const fields::VectorField half = [&f](double s, const ad::Tensor& h) { return ad::scale(f(s, h), 0.5); };
    const auto x = tape.constant(h0);
    const auto a = odeint::solve(f, x, unit);
    const auto c = odeint::solve(half, x, doubled);
    std::ostringstream what;
    what << "trial " << k << " scheme " << odeint::to_string(unit.scheme);
    t.trial(max_abs(a.final_state.value() - c.final_state.value()), what.str());
  }
  return t.result();
}

std::vector<PropertyResult> all_properties(int trials, std::uint64_t seed) {
  return {permutation_equivariance(trials, seed), force_antisymmetry(trials, seed + 1),
          adjacency_symmetry(trials, seed + 2),   metric_identities(trials, seed + 3),
          adam_zero_lr_fixpoint(trials, seed + 4), time_rescaling(trials, seed + 5)};
}

}  // namespace gde::checks

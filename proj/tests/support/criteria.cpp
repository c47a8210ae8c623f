#include "support/criteria.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "gde/cli/commands.hpp"
#include "gde/cli/gradcheck_suite.hpp"
#include "gde/hybrid/hybrid.hpp"
#include "gde/io/sequence.hpp"
#include "gde/odeint/odeint.hpp"
#include "support/helpers.hpp"
#include "support/properties.hpp"

namespace gde::checks {

using ad::Index;
using ad::Matrix;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double convergence_slope(const std::vector<double>& dts, const std::vector<double>& errors) {
  const double n = static_cast<double>(dts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double x = std::log(dts[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double geometric_chi_square(const std::vector<std::size_t>& gaps, double p, int& dof) {
  const double total = static_cast<double>(gaps.size());
  // Bins 1..K-1 and a tail bin >= K, K chosen so the tail expectation stays >= 5.
  std::size_t K = 1;
  while (total * std::pow(1.0 - p, static_cast<double>(K)) >= 5.0) ++K;
  std::vector<double> observed(K + 1, 0.0);
  for (auto g : gaps) observed[std::min(g, K)] += 1.0;
  double stat = 0.0;
  for (std::size_t g = 1; g <= K; ++g) {
    const double prob =
        g < K ? p * std::pow(1.0 - p, static_cast<double>(g - 1)) : std::pow(1.0 - p, static_cast<double>(K - 1));
    const double expected = total * prob;
    stat += (observed[g] - expected) * (observed[g] - expected) / expected;
  }
  dof = static_cast<int>(K) - 1;
  return stat;
}

CriterionResult gradient_suite() {
  CriterionResult r{1, "gradient suite", false, "", 0.0};
  const auto t0 = Clock::now();
  const auto results = cli::run_gradcheck_suite({0, true});
  r.seconds = since(t0);
  int failed = 0, cases = 0;
  double worst = 0.0;
  std::string worst_name, failures;
  bool control_caught = false;
  for (const auto& c : results) {
    if (c.name.rfind("negative_control", 0) == 0) {
      control_caught = !c.passed;
      continue;
    }
    ++cases;
    if (!c.passed) {
      ++failed;
      failures += " " + c.name;
    }
    const double relative = c.worst_relative / c.tolerance;
    if (relative > worst) {
      worst = relative;
      worst_name = c.name;
    }
  }
  r.passed = failed == 0 && control_caught && r.seconds < 120.0;
  r.detail = fmt("%d cases, %d failed%s; worst %s at %.2e of tolerance; negative control %s; %.1fs (< 120s)", cases,
                 failed, failures.c_str(), worst_name.c_str(), worst, control_caught ? "caught" : "MISSED",
                 r.seconds);
  return r;
}

CriterionResult solver_orders() {
  CriterionResult r{2, "solver orders and NFE", false, "", 0.0};
  const auto t0 = Clock::now();
  long calls = 0;
  const fields::VectorField decay = [&calls](double, const ad::Tensor& h) {
    ++calls;
    return ad::scale(h, -1.0);
  };
  const double exact = std::exp(-1.0);
  auto solve = [&](odeint::Scheme scheme, int steps, double tol, odeint::SolveResult& out) {
    ad::Tape tape;
    odeint::SolverConfig cfg;
    cfg.scheme = scheme;
    cfg.fixed_steps = steps;
    cfg.rtol = cfg.atol = tol;
    calls = 0;
    out = odeint::solve(decay, tape.constant(Matrix::Ones(1, 1)), cfg);
    return std::abs(out.final_state.value()(0, 0) - exact);
  };

  bool nfe_exact = true;
  std::vector<double> slopes;
  for (auto scheme : {odeint::Scheme::rk2, odeint::Scheme::rk4}) {
    std::vector<double> dts, errs;
    for (int steps : {4, 8, 16, 32, 64}) {
      odeint::SolveResult res;
      errs.push_back(solve(scheme, steps, 1e-6, res));
      dts.push_back(1.0 / steps);
      const long k = odeint::stages(scheme);
      nfe_exact = nfe_exact && res.nfe == k * steps && calls == res.nfe;
    }
    slopes.push_back(convergence_slope(dts, errs));
  }
  odeint::SolveResult adaptive;
  const double dopri_err = solve(odeint::Scheme::dopri5, 1, 1e-6, adaptive);
  const bool dopri_nfe =
      calls == adaptive.nfe && adaptive.nfe == 1 + 6L * (adaptive.accepted + adaptive.rejected);
  r.seconds = since(t0);
  const bool slopes_ok = slopes[0] >= 1.7 && slopes[0] <= 2.3 && slopes[1] >= 3.7 && slopes[1] <= 4.3;
  r.passed = slopes_ok && dopri_err <= 1e-4 && nfe_exact && dopri_nfe;
  r.detail = fmt(
      "rk2 slope %.3f in [1.7,2.3], rk4 slope %.3f in [3.7,4.3]; dopri5 |h(1)-e^-1| = %.2e (<= 1e-4), "
      "nfe %ld = 1 + 6*(%d+%d) %s; fixed-step nfe = k*steps %s",
      slopes[0], slopes[1], dopri_err, adaptive.nfe, adaptive.accepted, adaptive.rejected,
      dopri_nfe ? "ok" : "MISMATCH", nfe_exact ? "ok" : "MISMATCH");
  return r;
}

CriterionResult particle_experiment(const ParticleExperimentConfig& pc) {
  CriterionResult r{3, "multi-particle extrapolation ordering", false, "", 0.0};
  const auto t0 = Clock::now();
  cli::RunConfig cfg;
  cfg.task = cli::Task::particles;
  cfg.sim.seed = pc.sim_seed;
  cfg.epochs = pc.epochs;
  cfg.horizons = train::kDefaultHorizons;
  const auto data = cli::load_task_data(cfg);

  // model -> horizon index -> per-seed MAPE
  std::map<std::string, std::vector<std::vector<double>>> mape;
  for (const std::string model : {"static-baseline", "node-baseline", "gcde", "gcde2"}) {
    cfg.model = model;
    auto& table = mape[model];
    table.assign(cfg.horizons.size(), {});
    for (const auto seed : pc.seeds) {
      const auto run = cli::train_seed(cfg, data, seed);
      const auto metrics = cli::evaluate_seed(cfg, data, run.params);
      const auto values = metrics.at("mape").get<std::vector<double>>();
      for (std::size_t h = 0; h < values.size(); ++h) table[h].push_back(values[h]);
    }
  }
  r.seconds = since(t0);

  auto at = [&](const std::string& model, int horizon) {
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h)
      if (cfg.horizons[h] == horizon) return mean(mape[model][h]);
    return std::nan("");
  };
  const double gcde5 = at("gcde", 5), node5 = at("node-baseline", 5), static5 = at("static-baseline", 5);
  bool node_beats_static = true;
  for (int h : cfg.horizons)
    if (h >= 3) node_beats_static = node_beats_static && at("node-baseline", h) < at("static-baseline", h);
  const double gcde20 = at("gcde", 20), gcde2_20 = at("gcde2", 20);
  const bool c1 = gcde5 < node5 / 2.0;
  const bool c2 = node_beats_static;
  const bool c3 = gcde2_20 <= 1.10 * gcde20;
  const bool budget = r.seconds <= 1800.0;
  r.passed = c1 && c2 && c3 && budget && pc.epochs <= 300;
  r.detail = fmt(
      "%zu seeds, %d epochs. MAPE5 gcde %.2f < node-baseline %.2f / 2 %s; node-baseline < static at every h>=3 %s "
      "(MAPE5 static %.2f); MAPE20 gcde2 %.2f <= 1.10 x gcde %.2f %s; %.0fs (<= 1800s)",
      pc.seeds.size(), pc.epochs, gcde5, node5, c1 ? "ok" : "FAIL", c2 ? "ok" : "FAIL", static5, gcde2_20, gcde20,
      c3 ? "ok" : "FAIL", r.seconds);
  return r;
}

CriterionResult hybrid_flow_off() {
  CriterionResult r{4, "hybrid flow-off equivalence", false, "", 0.0};
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4);
  const std::size_t n = 6;
  graph::GraphSequence stream;
  double t = 0.0;
  std::uniform_real_distribution<double> gap(0.2, 2.0);
  std::bernoulli_distribution edge(0.35);
  for (int k = 0; k < 20; ++k) {
    t += gap(rng);
    std::vector<graph::Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (edge(rng)) edges.emplace_back(i, j);
    stream.timestamps.push_back(t);
    stream.graphs.push_back(graph::Graph::undirected(n, edges));
    stream.features.push_back(testing::uniform(static_cast<Index>(n), 3, rng));
  }

  ad::ParameterSet params;
  auto with_flow =
      hybrid::HybridModel::create(params, 3, 5, 4, 1, {{5, ad::Activation::tanh}, {5, ad::Activation::none}}, rng);
  for (auto& [name, value] : params)
    if (name.rfind("flow.", 0) == 0) value.setZero();
  auto discrete = with_flow;
  discrete.flow.reset();

  bool identical = true;
  std::size_t compared = 0;
  for (auto scheme : {odeint::Scheme::rk4, odeint::Scheme::dopri5}) {
    odeint::SolverConfig solver;
    solver.scheme = scheme;
    solver.fixed_steps = 3;
    ad::Tape tape;
    ad::Binding b(tape, params, false);
    const auto a = hybrid::hybrid_forward(with_flow, b, stream, solver);
    const auto c = hybrid::hybrid_forward(discrete, b, stream, solver);
    identical = identical && a.outputs.size() == c.outputs.size();
    for (std::size_t k = 0; identical && k < a.outputs.size(); ++k) {
      identical = a.outputs[k].value() == c.outputs[k].value() && a.post_jump[k].value() == c.post_jump[k].value();
      ++compared;
    }
  }
  r.seconds = since(t0);
  r.passed = identical && compared == 40;
  r.detail = fmt("20-step irregular stream, rk4 and dopri5: %zu outputs compared, %s", compared,
                 identical ? "bit-identical" : "MISMATCH");
  return r;
}

CriterionResult gcgru_zero_parameters() {
  CriterionResult r{5, "GCGRU zero-parameter identity", false, "", 0.0};
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5);
  bool exact = true;
  int cases = 0;
  for (std::size_t n : {1, 3, 7}) {
    ad::ParameterSet params;
    const auto cell = hybrid::GCGRUCell::create(params, "cell", 4, 6, rng);
    for (auto& [name, value] : params) value.setZero();
    std::vector<graph::Edge> edges;
    for (std::size_t i = 1; i < n; ++i) edges.emplace_back(i - 1, i);
    const auto g = graph::Graph::undirected(n, edges);
    ad::Tape tape;
    ad::Binding b(tape, params, false);
    const Matrix h = testing::uniform(static_cast<Index>(n), 6, rng, -5, 5);
    const auto out = hybrid::gcgru_jump(tape.constant(h), tape.constant(testing::uniform(static_cast<Index>(n), 4, rng)),
                                        graph::normalize(g), cell, b);
    const Matrix half = 0.5 * h;
    exact = exact && out.value() == half;
    ++cases;
  }
  r.seconds = since(t0);
  r.passed = exact;
  r.detail = fmt("%d graphs: H+ %s 0.5*H", cases, exact ? "==" : "!=");
  return r;
}

CriterionResult undersampling_statistics(int trials) {
  CriterionResult r{6, "undersampling gap statistics", false, "", 0.0};
  const auto t0 = Clock::now();
  bool all = true;
  std::string detail;
  for (double p : {0.3, 0.5, 0.7}) {
    std::vector<std::size_t> gaps;
    gaps.reserve(static_cast<std::size_t>(trials));
    const std::uint64_t base = static_cast<std::uint64_t>(p * 1e6);
    for (int k = 0; k < trials; ++k) {
      const auto kept = io::undersample_indices(200, p, base + static_cast<std::uint64_t>(k));
      if (kept.size() < 2) continue;
      gaps.push_back(kept[1] - kept[0]);
    }
    int dof = 0;
    const double stat = geometric_chi_square(gaps, p, dof);
    const double critical = boost::math::quantile(boost::math::chi_squared(dof), 0.99);
    const bool ok = stat < critical && gaps.size() == static_cast<std::size_t>(trials);
    all = all && ok;
    double mean_gap = 0.0;
    for (auto g : gaps) mean_gap += static_cast<double>(g);
    mean_gap /= static_cast<double>(gaps.size());
    detail += fmt("%sp=%.1f chi2 %.2f < %.2f (dof %d, mean gap %.3f vs %.3f) %s", detail.empty() ? "" : "; ", p, stat,
                  critical, dof, mean_gap, 1.0 / p, ok ? "ok" : "FAIL");
  }
  r.seconds = since(t0);
  r.passed = all;
  r.detail = fmt("%d trials each, alpha 0.01: ", trials) + detail;
  return r;
}

CriterionResult node_classification(const NodeExperimentConfig& nc) {
  CriterionResult r{7, "SBM node classification", false, "", 0.0};
  const auto t0 = Clock::now();
  cli::RunConfig cfg;
  cfg.task = cli::Task::node_class;
  cfg.sbm.seed = nc.sbm_seed;
  cfg.epochs = nc.epochs;
  const auto data = cli::load_task_data(cfg);
  std::map<std::string, double> acc;
  std::map<std::string, double> nfe;
  for (const std::string model : {"gcde-rk4", "gcn"}) {
    cfg.model = model;
    std::vector<double> a, f;
    for (const auto seed : nc.seeds) {
      const auto run = cli::train_seed(cfg, data, seed);
      a.push_back(run.summary.at("test_accuracy").get<double>());
      f.push_back(run.summary.at("mean_nfe").get<double>());
    }
    acc[model] = mean(a);
    nfe[model] = mean(f);
  }
  r.seconds = since(t0);
  const double gap = std::abs(acc["gcn"] - acc["gcde-rk4"]);
  r.passed = acc["gcde-rk4"] >= 0.95 && gap <= 0.03;
  r.detail = fmt("%zu seeds, %d epochs: gcde-rk4 %.2f%% (>= 95%%, mean NFE %.1f), gcn %.2f%%, gap %.2f points (<= 3)",
                 nc.seeds.size(), nc.epochs, 100 * acc["gcde-rk4"], nfe["gcde-rk4"], 100 * acc["gcn"], 100 * gap);
  return r;
}

CriterionResult property_suites(int trials) {
  CriterionResult r{8, "property suites", false, "", 0.0};
  const auto t0 = Clock::now();
  const auto results = all_properties(trials, 2024);
  r.seconds = since(t0);
  bool all = true;
  for (const auto& p : results) {
    all = all && p.passed() && p.trials == trials;
    r.detail += fmt("%s%s %d/%d", r.detail.empty() ? "" : "; ", p.name.c_str(), p.trials - p.failures, p.trials);
    if (!p.passed()) r.detail += " FAIL (" + p.detail + ")";
  }
  r.passed = all && r.seconds < 300.0;
  r.detail += fmt("; %.1fs (< 300s)", r.seconds);
  return r;
}

}  // namespace gde::checks

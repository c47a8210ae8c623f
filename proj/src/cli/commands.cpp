#include "gde/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "gde/cli/gradcheck_suite.hpp"
#include "gde/errors.hpp"
#include "gde/graph/graph.hpp"
#include "gde/train/forecast_task.hpp"
#include "gde/train/node_task.hpp"
#include "gde/train/particle_task.hpp"

#ifndef GDE_VERSION
#define GDE_VERSION "0.0.0"
#endif

namespace gde::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view version() { return GDE_VERSION; }

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.out) cfg.out = *o.out;
  if (o.seeds) cfg.seeds = parse_seed_list(*o.seeds);
  if (o.horizons) cfg.horizons = parse_int_list(*o.horizons);
  cfg.validate();
}

RunConfig load_config(const fs::path& path, const Overrides& overrides) {
  RunConfig cfg = parse_config(path);
  apply_overrides(cfg, overrides);
  return cfg;
}

TaskData load_task_data(const RunConfig& cfg) {
  switch (cfg.task) {
    case Task::particles: {
      if (!cfg.rollout.empty()) {
        auto loaded = io::read_rollout(cfg.rollout);
        return ParticleData{particles::make_dataset(loaded.rollout), loaded.config};
      }
      return ParticleData{particles::make_dataset(particles::simulate(cfg.sim)), cfg.sim};
    }
    case Task::node_class:
      if (!cfg.data_dir.empty()) return io::load_static(io::StaticFiles::in(cfg.data_dir));
      return io::make_sbm(cfg.sbm);
    case Task::forecast: {
      io::TemporalDataset raw =
          cfg.data_dir.empty() ? io::make_synthetic_stream(cfg.stream) : io::load_sequence(cfg.data_dir);
      raw = io::with_time_features(std::move(raw), cfg.period);
      if (cfg.keep_prob < 1.0) raw = io::undersample(raw, cfg.keep_prob, cfg.stream.seed);
      return raw;
    }
  }
  throw ContractError("unreachable task");
}

std::string Curve::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << '\n';
  }
  return os.str();
}

namespace {

template <typename T>
const T& expect(const TaskData& data) {
  const T* p = std::get_if<T>(&data);
  if (!p) throw ContractError("task data does not match the configured task");
  return *p;
}

int default_epochs(Task t) {
  switch (t) {
    case Task::particles: return 100;
    case Task::node_class: return 200;
    case Task::forecast: return 50;
  }
  return 100;
}

int epochs_of(const RunConfig& cfg) { return cfg.epochs >= 0 ? cfg.epochs : default_epochs(cfg.task); }

train::AdamConfig adam_of(const RunConfig& cfg, double default_decay) {
  train::AdamConfig a;
  a.lr = cfg.lr;
  a.weight_decay = cfg.weight_decay >= 0.0 ? cfg.weight_decay : default_decay;
  return a;
}

train::ParticleModel particle_model(const RunConfig& cfg, const ParticleData& d, ad::ParameterSet& params,
                                    std::mt19937_64& rng) {
  return train::ParticleModel::create(train::parse_particle_model(cfg.model), static_cast<ad::Index>(d.sim.n),
                                      d.sim.dt, cfg.solver, params, rng);
}

train::NodeModel node_model(const RunConfig& cfg, const io::StaticDataset& d, ad::ParameterSet& params,
                            std::mt19937_64& rng) {
  train::NodeModelConfig mc;
  mc.hidden = cfg.hidden;
  mc.input_dropout = cfg.input_dropout;
  mc.field_dropout = cfg.field_dropout;
  mc.field = cfg.field;
  mc.solver = cfg.solver;
  return train::NodeModel::create(train::parse_node_model(cfg.model), d.features.cols(),
                                  static_cast<ad::Index>(d.num_classes()), mc, params, rng);
}

train::ForecastModel forecast_model(const RunConfig& cfg, const io::TemporalDataset& d, ad::ParameterSet& params,
                                    std::mt19937_64& rng) {
  train::ForecastModelConfig mc;
  mc.gru_hidden = cfg.gru_hidden;
  mc.gcgru_hidden = cfg.gcgru_hidden;
  mc.head_hidden = cfg.head_hidden;
  mc.flow = cfg.field;
  mc.solver = cfg.solver;
  mc.time_scale = cfg.time_scale;
  return train::ForecastModel::create(train::parse_forecast_model(cfg.model), d.sequence.features.front().cols(),
                                      static_cast<ad::Index>(d.target_channels.size()), mc, params, rng);
}

// Initial parameters of the configured model for a seed.
ad::ParameterSet fresh_params(const RunConfig& cfg, const TaskData& data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ad::ParameterSet params;
  switch (cfg.task) {
    case Task::particles: particle_model(cfg, expect<ParticleData>(data), params, rng); break;
    case Task::node_class: node_model(cfg, expect<io::StaticDataset>(data), params, rng); break;
    case Task::forecast: forecast_model(cfg, expect<io::TemporalDataset>(data), params, rng); break;
  }
  return params;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json manifest(std::string_view command, const RunConfig& cfg) {
  return {{"command", command}, {"version", version()}, {"config", cfg.to_json()}};
}

std::vector<double> column(const json& metrics, const std::string& key) {
  return metrics.at(key).get<std::vector<double>>();
}

}  // namespace

SeedRun train_seed(const RunConfig& cfg, const TaskData& data, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  ad::ParameterSet params;
  SeedRun out;
  out.seed = seed;
  const int epochs = epochs_of(cfg);
  const std::string tag = cfg.model + " seed " + std::to_string(seed);

  switch (cfg.task) {
    case Task::particles: {
      const auto& d = expect<ParticleData>(data);
      auto model = particle_model(cfg, d, params, rng);
      train::ParticleTrainConfig tc;
      tc.epochs = epochs;
      tc.batch_size = cfg.batch_size ? cfg.batch_size : 64;
      tc.adam = adam_of(cfg, 0.0);
      tc.seed = seed;
      out.curve.columns = {"epoch", "loss", "nfe"};
      auto run = train::train_particle_model(model, params, d.dataset, tc, [&](const train::EpochRecord& r) {
        out.curve.rows.push_back({double(r.epoch), r.loss, double(r.nfe)});
        out.nfe_total += r.nfe;
        spdlog::debug("{} epoch {} loss {:.6g} nfe {}", tag, r.epoch, r.loss, r.nfe);
      });
      out.params = std::move(run.params);
      out.summary = {{"final_loss", run.curve.empty() ? 0.0 : run.curve.back().loss}};
      break;
    }
    case Task::node_class: {
      const auto& d = expect<io::StaticDataset>(data);
      auto model = node_model(cfg, d, params, rng);
      train::NodeTrainConfig tc;
      tc.epochs = epochs;
      tc.adam = adam_of(cfg, 5e-4);
      tc.seed = seed;
      out.curve.columns = {"epoch", "train_loss", "val_loss", "val_accuracy", "nfe"};
      auto run = train::train_node_model(model, params, d, tc, [&](const train::NodeEpoch& r) {
        out.curve.rows.push_back({double(r.epoch), r.train_loss, r.val_loss, r.val_accuracy, double(r.nfe)});
        out.nfe_total += r.nfe;
        spdlog::debug("{} epoch {} train {:.4f} val {:.4f} acc {:.3f}", tag, r.epoch, r.train_loss, r.val_loss,
                      r.val_accuracy);
      });
      out.params = std::move(run.params);
      out.summary = {{"selected_epoch", run.selected_epoch},
                     {"test_accuracy", run.test_accuracy},
                     {"mean_nfe", run.mean_nfe}};
      break;
    }
    case Task::forecast: {
      const auto& d = expect<io::TemporalDataset>(data);
      auto model = forecast_model(cfg, d, params, rng);
      train::ForecastTrainConfig tc;
      tc.epochs = epochs;
      tc.window = cfg.window;
      tc.batch_size = cfg.batch_size ? cfg.batch_size : 16;
      tc.train_fraction = cfg.train_fraction;
      tc.adam = adam_of(cfg, 0.0);
      tc.schedule = cfg.schedule.value_or(train::ScheduleKind::cosine_annealing);
      tc.t0 = cfg.t0;
      tc.seed = seed;
      out.curve.columns = {"epoch", "loss", "lr", "nfe"};
      auto run = train::train_forecast_model(model, params, train::model_view(model, d), tc,
                                             [&](const train::ForecastEpoch& r) {
                                               out.curve.rows.push_back({double(r.epoch), r.loss, r.lr, double(r.nfe)});
                                               out.nfe_total += r.nfe;
                                               spdlog::debug("{} epoch {} loss {:.6g}", tag, r.epoch, r.loss);
                                             });
      out.params = std::move(run.params);
      out.summary = {{"final_loss", run.curve.empty() ? 0.0 : run.curve.back().loss}};
      break;
    }
  }
  out.seconds = seconds_since(t0);
  return out;
}

json evaluate_seed(const RunConfig& cfg, const TaskData& data, const ad::ParameterSet& params,
                   std::vector<io::PredictionRow>* predictions) {
  std::mt19937_64 rng(0);
  ad::ParameterSet scratch;
  switch (cfg.task) {
    case Task::particles: {
      const auto& d = expect<ParticleData>(data);
      const auto model = particle_model(cfg, d, scratch, rng);
      const auto scores =
          train::eval_extrapolation(train::make_predictor(model, params), train::test_trajectory(d.dataset),
                                    cfg.horizons);
      json j{{"horizons", cfg.horizons}};
      for (const auto& s : scores) {
        j["mape"].push_back(s.mape);
        j["mape_windowed"].push_back(s.mape_windowed);
        j["mape_abs"].push_back(s.mape_abs);
        j["rmse"].push_back(s.rmse);
      }
      return j;
    }
    case Task::node_class: {
      const auto& d = expect<io::StaticDataset>(data);
      const auto model = node_model(cfg, d, scratch, rng);
      const auto op = graph::normalize(d.graph).as_operator();
      const double acc =
          train::eval_node_classification(model.predict(params, op, d.features), d.labels, d.test_mask);
      return {{"horizons", {0}}, {"accuracy", {acc}}};
    }
    case Task::forecast: {
      const auto& d = expect<io::TemporalDataset>(data);
      const auto model = forecast_model(cfg, d, scratch, rng);
      const auto view = train::model_view(model, d);
      const std::size_t first = train::train_split_end(view.size(), cfg.train_fraction);
      json j{{"horizons", cfg.horizons}};
      for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
        const auto s = train::eval_forecast(model, params, view, first, cfg.window,
                                            static_cast<std::size_t>(cfg.horizons[h]));
        j["mape"].push_back(s.mape);
        j["mape_abs"].push_back(s.mape_abs);
        j["rmse"].push_back(s.rmse);
        j["windows"].push_back(s.windows);
        if (h == 0 && predictions) {
          predictions->clear();
          for (const auto& [k, node, target, pred] : s.rows)
            predictions->push_back({k, view.sequence.timestamps[k], node, target, pred});
        }
      }
      return j;
    }
  }
  throw ContractError("unreachable task");
}

void check_compatible(const RunConfig& cfg, const TaskData& data, const ad::ParameterSet& params) {
  const auto expected = fresh_params(cfg, data, 0);
  for (const auto& [name, value] : expected) {
    if (!params.contains(name))
      throw ConfigError("checkpoint lacks parameter '" + name + "' required by model " + cfg.model);
    const auto& got = params.at(name);
    if (got.rows() != value.rows() || got.cols() != value.cols())
      throw ConfigError("checkpoint parameter '" + name + "' is " + std::to_string(got.rows()) + "x" +
                        std::to_string(got.cols()) + ", model " + cfg.model + " expects " +
                        std::to_string(value.rows()) + "x" + std::to_string(value.cols()));
  }
  for (const auto& [name, value] : params)
    if (!expected.contains(name)) throw ConfigError("checkpoint has unexpected parameter '" + name + "'");
}

json make_checkpoint(const RunConfig& cfg, std::uint64_t seed, const ad::ParameterSet& params) {
  return {{"task", to_string(cfg.task)},
          {"model", cfg.model},
          {"seed", seed},
          {"version", version()},
          {"params", params.to_json()}};
}

std::uint64_t read_checkpoint(const fs::path& path, const RunConfig& cfg, ad::ParameterSet& params) {
  const json j = io::read_json(path);
  try {
    const auto task = j.at("task").get<std::string>();
    const auto model = j.at("model").get<std::string>();
    if (task != to_string(cfg.task) || model != cfg.model)
      throw ConfigError("checkpoint " + path.string() + " holds " + task + "/" + model + " but the config asks for " +
                        std::string(to_string(cfg.task)) + "/" + cfg.model);
    params = ad::ParameterSet::from_json(j.at("params"));
    return j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

std::vector<train::EvalReport> aggregate(const RunConfig& cfg, const std::vector<std::pair<std::uint64_t, json>>& evals) {
  std::vector<std::string> metrics;
  switch (cfg.task) {
    case Task::particles: metrics = {"mape", "mape_windowed", "mape_abs", "rmse"}; break;
    case Task::node_class: metrics = {"accuracy"}; break;
    case Task::forecast: metrics = {"mape", "mape_abs", "rmse"}; break;
  }
  std::vector<train::EvalReport> reports;
  for (const auto& metric : metrics) {
    train::EvalReport r;
    r.model = cfg.model;
    r.metric = metric;
    for (const auto& [seed, j] : evals) {
      const auto horizons = j.at("horizons").get<std::vector<int>>();
      if (r.seeds.empty()) r.horizons = horizons;
      if (horizons != r.horizons) throw ConfigError("evaluations of different seeds use different horizons");
      r.add_seed(seed, column(j, metric));
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::string format_reports(const std::vector<train::EvalReport>& reports) {
  std::ostringstream os;
  for (const auto& r : reports) {
    os << "| " << r.model << " " << r.metric << " (" << r.seeds.size() << " seeds) |";
    for (int h : r.horizons) os << " h=" << h << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < r.horizons.size(); ++i) os << "---|";
    os << "\n|  |";
    const auto m = r.mean();
    const auto s = r.stddev();
    for (std::size_t i = 0; i < r.horizons.size(); ++i) {
      char cell[64];
      std::snprintf(cell, sizeof cell, " %.4g +- %.3g |", m[i], s[i]);
      os << cell;
    }
    os << "\n\n";
  }
  return os.str();
}

fs::path seed_dir(const RunConfig& cfg, std::uint64_t seed) { return cfg.out / ("seed_" + std::to_string(seed)); }

void cmd_simulate(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  spdlog::info("simulating {} particles for T={} with dt={}", cfg.sim.n, cfg.sim.horizon, cfg.sim.dt);
  const auto rollout = particles::simulate(cfg.sim);
  io::write_rollout(rollout, cfg.sim, cfg.out);
  json m = manifest("simulate", cfg);
  m["seed"] = cfg.sim.seed;
  m["steps"] = rollout.size();
  m["wall_clock_seconds"] = seconds_since(t0);
  m["files"] = {"rollout.csv", "rollout_edges.txt", "rollout.json"};
  io::write_json(cfg.out / "manifest.json", m);
  spdlog::info("wrote {} states to {}", rollout.size(), cfg.out.string());
}

void cmd_train(const RunConfig& cfg) {
  const TaskData data = load_task_data(cfg);
  for (const auto seed : cfg.seeds) {
    spdlog::info("training {} ({}) seed {}", cfg.model, to_string(cfg.task), seed);
    const SeedRun run = train_seed(cfg, data, seed);
    const fs::path dir = seed_dir(cfg, seed);
    io::write_json(dir / "checkpoint.json", make_checkpoint(cfg, seed, run.params));
    io::write_text(dir / "curve.csv", run.curve.to_csv());
    json per_epoch = json::array();
    const auto nfe_col = run.curve.columns.size() - 1;
    for (const auto& row : run.curve.rows) per_epoch.push_back(static_cast<long>(row[nfe_col]));
    json m = manifest("train", cfg);
    m["seed"] = seed;
    m["epochs"] = run.curve.rows.size();
    m["wall_clock_seconds"] = run.seconds;
    m["nfe"] = {{"scheme", odeint::to_string(cfg.solver.scheme)},
                {"total", run.nfe_total},
                {"mean_per_epoch", run.curve.rows.empty() ? 0.0
                                                          : static_cast<double>(run.nfe_total) /
                                                                static_cast<double>(run.curve.rows.size())},
                {"per_epoch", per_epoch}};
    m["metrics"] = run.summary;
    m["files"] = {"checkpoint.json", "curve.csv"};
    io::write_json(dir / "manifest.json", m);
    spdlog::info("seed {} done in {:.1f}s, {} field evaluations", seed, run.seconds, run.nfe_total);
  }
}

namespace {

void write_aggregate(const RunConfig& cfg, const std::vector<std::pair<std::uint64_t, json>>& evals,
                     const std::string& stem) {
  const auto reports = aggregate(cfg, evals);
  json j = json::array();
  std::string csv;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    j.push_back(reports[i].to_json());
    csv += reports[i].to_csv(i == 0);
  }
  io::write_json(cfg.out / (stem + ".json"), j);
  io::write_text(cfg.out / (stem + ".csv"), csv);
  io::write_text(cfg.out / (stem + ".md"), format_reports(reports));
}

std::string eval_csv(const RunConfig& cfg, std::uint64_t seed, const json& metrics) {
  std::ostringstream os;
  os.precision(17);
  os << "model,metric,horizon,seed,value\n";
  const auto horizons = metrics.at("horizons").get<std::vector<int>>();
  for (const auto& [key, values] : metrics.items()) {
    if (key == "horizons" || key == "windows") continue;
    for (std::size_t h = 0; h < horizons.size(); ++h)
      os << cfg.model << ',' << key << ',' << horizons[h] << ',' << seed << ',' << values[h].get<double>() << '\n';
  }
  return os.str();
}

}  // namespace

void cmd_eval(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
  const TaskData data = load_task_data(cfg);
  std::vector<std::pair<std::uint64_t, fs::path>> jobs;
  if (checkpoint) {
    jobs.emplace_back(0, *checkpoint);
  } else {
    for (const auto seed : cfg.seeds) jobs.emplace_back(seed, seed_dir(cfg, seed) / "checkpoint.json");
  }
  std::vector<std::pair<std::uint64_t, json>> evals;
  for (const auto& [requested, path] : jobs) {
    const auto t0 = std::chrono::steady_clock::now();
    ad::ParameterSet params;
    const std::uint64_t seed = read_checkpoint(path, cfg, params);
    if (!checkpoint && seed != requested)
      throw ConfigError("checkpoint " + path.string() + " was trained with seed " + std::to_string(seed));
    check_compatible(cfg, data, params);
    std::vector<io::PredictionRow> rows;
    const json metrics = evaluate_seed(cfg, data, params, &rows);
    const fs::path dir = seed_dir(cfg, seed);
    io::write_json(dir / "eval.json", metrics);
    io::write_text(dir / "eval.csv", eval_csv(cfg, seed, metrics));
    json m = manifest("eval", cfg);
    m["seed"] = seed;
    m["checkpoint"] = path.string();
    m["wall_clock_seconds"] = seconds_since(t0);
    m["metrics"] = metrics;
    m["files"] = {"eval.json", "eval.csv"};
    if (cfg.task == Task::forecast) {
      io::write_predictions(dir / "predictions.csv", rows);
      m["files"].push_back("predictions.csv");
    }
    io::write_json(dir / "eval_manifest.json", m);
    spdlog::info("evaluated {} seed {}", cfg.model, seed);
    evals.emplace_back(seed, metrics);
  }
  write_aggregate(cfg, evals, "eval_report");
}

std::string cmd_report(const RunConfig& cfg) {
  std::vector<std::pair<std::uint64_t, json>> evals;
  for (const auto seed : cfg.seeds) {
    const fs::path path = seed_dir(cfg, seed) / "eval.json";
    if (!fs::exists(path)) throw IoError("no evaluation for seed " + std::to_string(seed) + " at " + path.string());
    evals.emplace_back(seed, io::read_json(path));
  }
  write_aggregate(cfg, evals, "report");
  return format_reports(aggregate(cfg, evals));
}

bool cmd_gradcheck(const std::optional<fs::path>& out, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_gradcheck_suite({seed, false});
  bool ok = true;
  json cases = json::array();
  for (const auto& r : results) {
    ok = ok && r.passed;
    cases.push_back({{"name", r.name},
                     {"worst_relative", r.worst_relative},
                     {"parameter", r.worst_parameter},
                     {"row", r.worst_row},
                     {"col", r.worst_col},
                     {"tolerance", r.tolerance},
                     {"passed", r.passed}});
    const auto line = fmt::format("{:<34} {:>10.3e} (tol {:.0e}) {}[{},{}] {}", r.name, r.worst_relative,
                                  r.tolerance, r.worst_parameter, r.worst_row, r.worst_col,
                                  r.passed ? "ok" : "FAIL");
    std::printf("%s\n", line.c_str());
  }
  if (out) {
    io::write_json(*out / "gradcheck.json", {{"command", "gradcheck"},
                                             {"version", version()},
                                             {"seed", seed},
                                             {"wall_clock_seconds", seconds_since(t0)},
                                             {"passed", ok},
                                             {"cases", cases}});
  }
  return ok;
}

}  // namespace gde::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gde/autodiff/gradcheck.hpp"
#include "gde/cli/config.hpp"
#include "gde/io/results.hpp"
#include "gde/train/evaluation.hpp"

namespace gde::cli {

std::string_view version();

// Command-line flags that take precedence over the config file.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::string> seeds;
  std::optional<std::string> horizons;
};

RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});
void apply_overrides(RunConfig& cfg, const Overrides& overrides);

struct ParticleData {
  particles::ParticleDataset dataset;
  particles::SimConfig sim;
};

using TaskData = std::variant<ParticleData, io::StaticDataset, io::TemporalDataset>;

// Particles: the rollout in [sim] rollout, or a fresh simulation of [sim].
// Node classification: [data] dir in the static layout, or the SBM.
// Forecast: [data] dir in the sequence layout, or the synthetic stream;
// time features are appended and the stream is undersampled.
TaskData load_task_data(const RunConfig& cfg);

struct Curve {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;
};

struct SeedRun {
  std::uint64_t seed = 0;
  ad::ParameterSet params;  // final, or best-validation for node classification
  Curve curve;
  long nfe_total = 0;
  double seconds = 0.0;
  nlohmann::json summary;
};

// Trains one model instance. Parameters are initialised from `seed` and
// mini-batch order also follows it; the dataset is shared across seeds.
SeedRun train_seed(const RunConfig& cfg, const TaskData& data, std::uint64_t seed);

// Metrics of a trained parameter set. Particles: mape, mape_windowed,
// mape_abs and rmse per horizon. Node classification: test accuracy.
// Forecast: mape, mape_abs and rmse per horizon; `predictions` receives the
// rows of the first horizon when non-null.
nlohmann::json evaluate_seed(const RunConfig& cfg, const TaskData& data, const ad::ParameterSet& params,
                             std::vector<io::PredictionRow>* predictions = nullptr);

// Throws ConfigError unless `params` has exactly the parameter names and
// shapes of the configured model.
void check_compatible(const RunConfig& cfg, const TaskData& data, const ad::ParameterSet& params);

nlohmann::json make_checkpoint(const RunConfig& cfg, std::uint64_t seed, const ad::ParameterSet& params);
// Returns the seed stored in the checkpoint.
std::uint64_t read_checkpoint(const std::filesystem::path& path, const RunConfig& cfg, ad::ParameterSet& params);

// One report per metric, rows = seeds, columns = horizons.
std::vector<train::EvalReport> aggregate(const RunConfig& cfg,
                                         const std::vector<std::pair<std::uint64_t, nlohmann::json>>& evals);
// Markdown table of mean +- std per metric and horizon.
std::string format_reports(const std::vector<train::EvalReport>& reports);

std::filesystem::path seed_dir(const RunConfig& cfg, std::uint64_t seed);

// Commands. Each writes its outputs plus a manifest.json under cfg.out.
void cmd_simulate(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint);
// Returns the formatted table.
std::string cmd_report(const RunConfig& cfg);
// Writes gradcheck.json into `out` when given. Returns true when every case
// passed.
bool cmd_gradcheck(const std::optional<std::filesystem::path>& out, std::uint64_t seed);

}  // namespace gde::cli

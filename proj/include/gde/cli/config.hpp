#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gde/io/sequence.hpp"
#include "gde/io/static_data.hpp"
#include "gde/odeint/odeint.hpp"
#include "gde/particles/particles.hpp"
#include "gde/train/forecast_task.hpp"
#include "gde/train/node_task.hpp"
#include "gde/train/particle_task.hpp"

namespace gde::cli {

enum class Task { node_class, particles, forecast };

Task parse_task(std::string_view name);
std::string_view to_string(Task t);

// Everything a command needs, read from one INI file. Unknown keys are
// rejected so typos do not silently fall back to defaults.
struct RunConfig {
  Task task = Task::particles;
  std::string model = "gcde";
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out = "runs";
  std::vector<int> horizons;

  particles::SimConfig sim;
  // Existing rollout directory; empty means simulate from [sim].
  std::filesystem::path rollout;

  odeint::SolverConfig solver;

  int epochs = -1;  // negative selects the task default
  double lr = 0.01;
  double weight_decay = -1.0;  // negative selects the task default
  std::size_t batch_size = 0;  // 0 selects the task default
  std::optional<train::ScheduleKind> schedule;  // unset selects the task default
  int t0 = 10;

  // [model]
  ad::Index hidden = 64;
  std::vector<fields::LayerSpec> field;
  double input_dropout = 0.6;
  double field_dropout = 0.9;
  ad::Index gru_hidden = 50;
  ad::Index gcgru_hidden = 46;
  ad::Index head_hidden = 32;
  double time_scale = 1.0;

  // [data]
  std::filesystem::path data_dir;
  io::SbmConfig sbm;
  io::SyntheticStreamConfig stream;
  double keep_prob = 1.0;
  double period = 288.0;
  std::size_t window = 5;
  double train_fraction = 0.7;

  // Checks model/task compatibility and numeric ranges; throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_string(const std::string& text);

// "0..9", "3" or "0,2,5".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
std::vector<int> parse_int_list(std::string_view text);

// Models accepted for each task.
const std::vector<std::string>& models_for(Task t);

}  // namespace gde::cli

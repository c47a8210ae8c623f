#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "gde/particles/particles.hpp"

namespace gde::io {

using ad::Matrix;

// rollout.csv (step, t, particle, x1, x2, v1, v2), rollout_edges.txt
// ("step i j", each undirected edge once) and rollout.json with the
// simulation parameters.
void write_rollout(const particles::Rollout& rollout, const particles::SimConfig& cfg,
                   const std::filesystem::path& dir);

struct LoadedRollout {
  particles::Rollout rollout;
  particles::SimConfig config;
};

LoadedRollout read_rollout(const std::filesystem::path& dir);

nlohmann::json sim_config_to_json(const particles::SimConfig& cfg);
particles::SimConfig sim_config_from_json(const nlohmann::json& j);

// One row per (arrival, node, target channel).
struct PredictionRow {
  std::size_t k = 0;
  double t = 0.0;
  std::size_t node = 0;
  double target = 0.0;
  double prediction = 0.0;
};

// CSV with header k,t_k,node,target,prediction.
void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace gde::io

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gde/graph/graph.hpp"

namespace gde::io {

using ad::Index;
using ad::Matrix;

// Graph stream whose features hold the observation channels followed by
// auxiliary columns (time features). Only target_channels enter the loss.
struct TemporalDataset {
  graph::GraphSequence sequence;
  std::vector<Index> target_channels;

  std::size_t size() const { return sequence.size(); }
  void validate() const;
  bool operator==(const TemporalDataset& other) const = default;
};

// Directory layout: meta.json, t_<k>.csv (node features at arrival k) and
// edges_<k>.txt.
TemporalDataset load_sequence(const std::filesystem::path& dir);
void save_sequence(const TemporalDataset& data, const std::filesystem::path& dir);

// Keeps every arrival independently with probability keep_prob. The first
// arrival is always kept. Throws ContractError if nothing survives (only
// possible for an empty input).
TemporalDataset undersample(const TemporalDataset& data, double keep_prob, std::uint64_t seed);

// Indices of the arrivals kept by undersample with the same arguments.
std::vector<std::size_t> undersample_indices(std::size_t length, double keep_prob, std::uint64_t seed);

// (sin(2 pi t / period), cos(2 pi t / period)), one row per timestamp.
Matrix sine_time_features(const std::vector<double>& timestamps, double period);

// Appends the two sine time features to every node of every arrival.
TemporalDataset with_time_features(TemporalDataset data, double period);

// Appends the gap to the previous arrival (0 for the first) as a feature
// column; used as extra input for the graph-free and discrete baselines.
TemporalDataset with_delta_feature(TemporalDataset data);

// Smooth synthetic traffic-like stream on a ring of `nodes` sensors: a
// travelling daily wave plus noise, one observation channel, unit spacing.
struct SyntheticStreamConfig {
  std::size_t nodes = 8;
  std::size_t steps = 288;
  double period = 288.0;
  double noise = 0.02;
  std::uint64_t seed = 0;
};

TemporalDataset make_synthetic_stream(const SyntheticStreamConfig& cfg);

}  // namespace gde::io

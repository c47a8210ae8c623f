#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gde/graph/graph.hpp"

namespace gde::io {

using ad::Matrix;

// Graph, node features, integer labels and disjoint train/val/test masks.
struct StaticDataset {
  graph::Graph graph;
  Matrix features;
  std::vector<int> labels;
  std::vector<char> train_mask;
  std::vector<char> val_mask;
  std::vector<char> test_mask;

  std::size_t size() const { return labels.size(); }
  int num_classes() const;
  // Row counts agree, masks are disjoint, labels are non-negative.
  void validate() const;
};

struct StaticFiles {
  std::filesystem::path features;  // n rows of d comma separated values
  std::filesystem::path edges;     // "i j" per line
  std::filesystem::path labels;    // one integer per line
  std::filesystem::path masks;     // "train,val,test" 0/1 per line

  // features.csv, edges.txt, labels.csv, masks.csv inside dir.
  static StaticFiles in(const std::filesystem::path& dir);
};

StaticDataset load_static(const StaticFiles& files);
void save_static(const StaticDataset& data, const StaticFiles& files);

// Two-or-more block stochastic block model with noisy one-hot features.
struct SbmConfig {
  std::size_t nodes = 200;
  int blocks = 2;
  double p_in = 0.05;
  double p_out = 0.005;
  double noise = 0.5;
  std::size_t train_per_class = 20;
  std::size_t val = 60;
  std::size_t test = 100;
  std::uint64_t seed = 0;
};

StaticDataset make_sbm(const SbmConfig& cfg);

}  // namespace gde::io

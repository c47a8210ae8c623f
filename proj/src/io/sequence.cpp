#include "gde/io/sequence.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "gde/errors.hpp"
#include "text.hpp"

namespace gde::io {

void TemporalDataset::validate() const {
  sequence.validate();
  if (sequence.size() == 0) return;
  const std::size_t n = sequence.graphs.front().size();
  const Index width = sequence.features.front().cols();
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    if (sequence.graphs[k].size() != n || static_cast<std::size_t>(sequence.features[k].rows()) != n)
      throw ContractError("sequence: node count changes at arrival " + std::to_string(k));
    if (sequence.features[k].cols() != width)
      throw ContractError("sequence: feature width changes at arrival " + std::to_string(k));
  }
  for (Index c : target_channels)
    if (c < 0 || c >= width)
      throw ContractError("sequence: target channel " + std::to_string(c) + " outside feature width " +
                          std::to_string(width));
}

TemporalDataset load_sequence(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  nlohmann::json meta;
  try {
    auto in = detail::open_in(meta_path);
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(meta_path.string() + ": " + e.what());
  }
  TemporalDataset d;
  std::size_t nodes = 0;
  try {
    d.sequence.timestamps = meta.at("timestamps").get<std::vector<double>>();
    d.target_channels = meta.at("target_channels").get<std::vector<Index>>();
    nodes = meta.at("nodes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(meta_path.string() + ": " + e.what());
  }
  if (nodes == 0) throw IoError(meta_path.string() + ": nodes must be positive");
  for (std::size_t k = 0; k < d.sequence.timestamps.size(); ++k) {
    const auto fpath = dir / ("t_" + std::to_string(k) + ".csv");
    auto in = detail::open_in(fpath);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::skippable(line)) continue;
      std::vector<double> row;
      for (auto f : detail::split(line, ',')) row.push_back(detail::parse_double(f, detail::where(fpath, lineno)));
      if (!rows.empty() && row.size() != rows.front().size())
        throw IoError(detail::where(fpath, lineno) + ": " + std::to_string(row.size()) + " columns, expected " +
                      std::to_string(rows.front().size()));
      rows.push_back(std::move(row));
    }
    if (rows.size() != nodes)
      throw IoError(fpath.string() + ": " + std::to_string(rows.size()) + " rows, meta.json declares " +
                    std::to_string(nodes) + " nodes");
    Matrix x(static_cast<Index>(nodes), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < nodes; ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j) x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    d.sequence.features.push_back(std::move(x));
    const auto epath = dir / ("edges_" + std::to_string(k) + ".txt");
    d.sequence.graphs.push_back(graph::Graph::undirected(nodes, graph::read_edge_list(epath, nodes)));
  }
  try {
    d.validate();
  } catch (const ContractError& e) {
    throw IoError(dir.string() + ": " + e.what());
  }
  return d;
}

void save_sequence(const TemporalDataset& d, const std::filesystem::path& dir) {
  d.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json meta{{"timestamps", d.sequence.timestamps},
                      {"target_channels", d.target_channels},
                      {"nodes", d.size() ? d.sequence.graphs.front().size() : 0}};
  {
    auto out = detail::open_out(dir / "meta.json");
    out << meta.dump(2) << '\n';
  }
  for (std::size_t k = 0; k < d.size(); ++k) {
    auto out = detail::open_out(dir / ("t_" + std::to_string(k) + ".csv"));
    const Matrix& x = d.sequence.features[k];
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << detail::format_double(x(i, j));
      out << '\n';
    }
    graph::write_edge_list(dir / ("edges_" + std::to_string(k) + ".txt"), d.sequence.graphs[k]);
  }
}

std::vector<std::size_t> undersample_indices(std::size_t length, double keep_prob, std::uint64_t seed) {
  if (!(keep_prob > 0.0) || keep_prob > 1.0) throw ConfigError("undersample: keep probability must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(keep_prob);
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < length; ++k)
    if (k == 0 || keep(rng)) kept.push_back(k);
  if (kept.empty()) throw ContractError("undersample: no arrivals survived");
  return kept;
}

TemporalDataset undersample(const TemporalDataset& data, double keep_prob, std::uint64_t seed) {
  TemporalDataset out;
  out.target_channels = data.target_channels;
  for (std::size_t k : undersample_indices(data.size(), keep_prob, seed)) {
    out.sequence.timestamps.push_back(data.sequence.timestamps[k]);
    out.sequence.graphs.push_back(data.sequence.graphs[k]);
    out.sequence.features.push_back(data.sequence.features[k]);
  }
  return out;
}

Matrix sine_time_features(const std::vector<double>& timestamps, double period) {
  if (!(period > 0.0)) throw ConfigError("time feature period must be positive");
  Matrix f(static_cast<Index>(timestamps.size()), 2);
  for (std::size_t k = 0; k < timestamps.size(); ++k) {
    const double phase = 2.0 * std::numbers::pi * timestamps[k] / period;
    f(static_cast<Index>(k), 0) = std::sin(phase);
    f(static_cast<Index>(k), 1) = std::cos(phase);
  }
  return f;
}

namespace {

void append_columns(Matrix& x, const Eigen::RowVectorXd& values) {
  Matrix wider(x.rows(), x.cols() + values.size());
  wider.leftCols(x.cols()) = x;
  wider.rightCols(values.size()).rowwise() = values;
  x = std::move(wider);
}

}  // namespace

TemporalDataset with_time_features(TemporalDataset data, double period) {
  const Matrix f = sine_time_features(data.sequence.timestamps, period);
  for (std::size_t k = 0; k < data.size(); ++k) append_columns(data.sequence.features[k], f.row(static_cast<Index>(k)));
  return data;
}

TemporalDataset with_delta_feature(TemporalDataset data) {
  for (std::size_t k = 0; k < data.size(); ++k) {
    Eigen::RowVectorXd gap(1);
    gap(0) = k == 0 ? 0.0 : data.sequence.timestamps[k] - data.sequence.timestamps[k - 1];
    append_columns(data.sequence.features[k], gap);
  }
  return data;
}

TemporalDataset make_synthetic_stream(const SyntheticStreamConfig& cfg) {
  if (cfg.nodes < 2 || cfg.steps < 2) throw ConfigError("synthetic stream: need at least 2 nodes and 2 steps");
  if (!(cfg.period > 0.0)) throw ConfigError("synthetic stream: period must be positive");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise);
  std::vector<graph::Edge> ring;
  for (std::size_t i = 0; i < cfg.nodes; ++i) ring.emplace_back(i, (i + 1) % cfg.nodes);
  const graph::Graph g = graph::Graph::undirected(cfg.nodes, ring);
  TemporalDataset d;
  d.target_channels = {0};
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const double t = static_cast<double>(k);
    Matrix x(static_cast<Index>(cfg.nodes), 1);
    for (std::size_t i = 0; i < cfg.nodes; ++i) {
      const double lag = static_cast<double>(i) / static_cast<double>(cfg.nodes);
      x(static_cast<Index>(i), 0) = 2.0 + std::sin(2.0 * std::numbers::pi * (t / cfg.period - lag)) + noise(rng);
    }
    d.sequence.timestamps.push_back(t);
    d.sequence.graphs.push_back(g);
    d.sequence.features.push_back(std::move(x));
  }
  return d;
}

}  // namespace gde::io

#include "gde/io/static_data.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "gde/errors.hpp"
#include "text.hpp"

namespace gde::io {

using detail::where;

int StaticDataset::num_classes() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

void StaticDataset::validate() const {
  const std::size_t n = labels.size();
  if (graph.size() != n)
    throw ContractError("dataset: graph has " + std::to_string(graph.size()) + " nodes, " + std::to_string(n) +
                        " labels");
  if (static_cast<std::size_t>(features.rows()) != n)
    throw ContractError("dataset: " + std::to_string(features.rows()) + " feature rows, " + std::to_string(n) +
                        " labels");
  if (train_mask.size() != n || val_mask.size() != n || test_mask.size() != n)
    throw ContractError("dataset: mask length differs from node count " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0) throw ContractError("dataset: negative label at node " + std::to_string(i));
    if (train_mask[i] + val_mask[i] + test_mask[i] > 1)
      throw ContractError("dataset: masks overlap at node " + std::to_string(i));
  }
}

StaticFiles StaticFiles::in(const std::filesystem::path& dir) {
  return {dir / "features.csv", dir / "edges.txt", dir / "labels.csv", dir / "masks.csv"};
}

namespace {

Matrix read_features(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    std::vector<double> row;
    for (auto f : detail::split(line, ',')) row.push_back(detail::parse_double(f, where(path, lineno)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(where(path, lineno) + ": " + std::to_string(row.size()) + " columns, expected " +
                    std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + ": no feature rows");
  Matrix m(static_cast<ad::Index>(rows.size()), static_cast<ad::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<ad::Index>(i), static_cast<ad::Index>(j)) = rows[i][j];
  return m;
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    const int v = detail::parse_int<int>(detail::trim(line), where(path, lineno));
    if (v < 0) throw IoError(where(path, lineno) + ": label " + std::to_string(v) + " out of range");
    labels.push_back(v);
  }
  return labels;
}

void read_masks(const std::filesystem::path& path, StaticDataset& d) {
  auto in = detail::open_in(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 3) throw IoError(where(path, lineno) + ": expected 3 mask columns");
    char flags[3];
    for (int c = 0; c < 3; ++c) {
      const int v = detail::parse_int<int>(fields[static_cast<std::size_t>(c)], where(path, lineno));
      if (v != 0 && v != 1) throw IoError(where(path, lineno) + ": mask values must be 0 or 1");
      flags[c] = static_cast<char>(v);
    }
    if (flags[0] + flags[1] + flags[2] > 1) throw IoError(where(path, lineno) + ": node is in more than one split");
    d.train_mask.push_back(flags[0]);
    d.val_mask.push_back(flags[1]);
    d.test_mask.push_back(flags[2]);
  }
}

}  // namespace

StaticDataset load_static(const StaticFiles& files) {
  StaticDataset d;
  d.features = read_features(files.features);
  d.labels = read_labels(files.labels);
  const auto n = static_cast<std::size_t>(d.features.rows());
  if (d.labels.size() != n)
    throw IoError(files.features.string() + " has " + std::to_string(n) + " rows but " + files.labels.string() +
                  " has " + std::to_string(d.labels.size()));
  read_masks(files.masks, d);
  if (d.train_mask.size() != n)
    throw IoError(files.features.string() + " has " + std::to_string(n) + " rows but " + files.masks.string() +
                  " has " + std::to_string(d.train_mask.size()));
  d.graph = graph::Graph::undirected(n, graph::read_edge_list(files.edges, n));
  d.validate();
  return d;
}

void save_static(const StaticDataset& d, const StaticFiles& files) {
  d.validate();
  {
    auto out = detail::open_out(files.features);
    for (ad::Index i = 0; i < d.features.rows(); ++i) {
      for (ad::Index j = 0; j < d.features.cols(); ++j)
        out << (j ? "," : "") << detail::format_double(d.features(i, j));
      out << '\n';
    }
  }
  graph::write_edge_list(files.edges, d.graph);
  {
    auto out = detail::open_out(files.labels);
    for (int l : d.labels) out << l << '\n';
  }
  auto out = detail::open_out(files.masks);
  for (std::size_t i = 0; i < d.size(); ++i)
    out << int(d.train_mask[i]) << ',' << int(d.val_mask[i]) << ',' << int(d.test_mask[i]) << '\n';
  if (!out) throw IoError("failed writing " + files.masks.string());
}

StaticDataset make_sbm(const SbmConfig& cfg) {
  if (cfg.blocks < 2) throw ConfigError("sbm: need at least two blocks");
  if (cfg.nodes < static_cast<std::size_t>(cfg.blocks)) throw ConfigError("sbm: fewer nodes than blocks");
  if (cfg.p_in < 0 || cfg.p_in > 1 || cfg.p_out < 0 || cfg.p_out > 1)
    throw ConfigError("sbm: edge probabilities must lie in [0, 1]");
  const std::size_t n = cfg.nodes;
  const auto k = static_cast<std::size_t>(cfg.blocks);
  if (cfg.train_per_class * k + cfg.val + cfg.test > n) throw ConfigError("sbm: splits exceed the node count");

  std::mt19937_64 rng(cfg.seed);
  StaticDataset d;
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.labels[i] = static_cast<int>(i * k / n);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<graph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < (d.labels[i] == d.labels[j] ? cfg.p_in : cfg.p_out)) edges.emplace_back(i, j);
  d.graph = graph::Graph::undirected(n, edges);

  std::normal_distribution<double> noise(0.0, cfg.noise);
  d.features = Matrix::Zero(static_cast<ad::Index>(n), static_cast<ad::Index>(k));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c)
      d.features(static_cast<ad::Index>(i), static_cast<ad::Index>(c)) =
          (static_cast<std::size_t>(d.labels[i]) == c ? 1.0 : 0.0) + noise(rng);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  d.train_mask.assign(n, 0);
  d.val_mask.assign(n, 0);
  d.test_mask.assign(n, 0);
  std::vector<std::size_t> per_class(k, 0);
  std::vector<std::size_t> rest;
  for (std::size_t i : order) {
    auto& count = per_class[static_cast<std::size_t>(d.labels[i])];
    if (count < cfg.train_per_class) {
      d.train_mask[i] = 1;
      ++count;
    } else {
      rest.push_back(i);
    }
  }
  for (std::size_t r = 0; r < rest.size(); ++r) {
    if (r < cfg.val) d.val_mask[rest[r]] = 1;
    else if (r < cfg.val + cfg.test) d.test_mask[rest[r]] = 1;
  }
  return d;
}

}  // namespace gde::io

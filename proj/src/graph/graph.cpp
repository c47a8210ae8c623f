#include "gde/graph/graph.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gde/errors.hpp"

namespace gde::graph {

namespace {

void check_endpoint(std::size_t n, const Edge& e) {
  if (e.first >= n || e.second >= n)
    throw IndexError("edge (" + std::to_string(e.first) + ", " + std::to_string(e.second) +
                     ") has an endpoint outside [0, " + std::to_string(n) + ")");
}

}  // namespace

Graph::Graph(std::size_t n, std::set<Edge> edges, bool directed)
    : n_(n), edges_(std::move(edges)), directed_(directed) {}

Graph Graph::undirected(std::size_t n, const std::vector<Edge>& edges) {
  std::set<Edge> set;
  for (const auto& e : edges) {
    check_endpoint(n, e);
    set.insert(e);
    set.insert({e.second, e.first});
  }
  return Graph(n, std::move(set), false);
}

Graph Graph::directed(std::size_t n, const std::vector<Edge>& edges) {
  std::set<Edge> set;
  for (const auto& e : edges) {
    check_endpoint(n, e);
    set.insert(e);
  }
  return Graph(n, std::move(set), true);
}

Graph Graph::from_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("adjacency must be square, got " + ad::shape_string(a));
  std::vector<Edge> edges;
  bool symmetric = true;
  for (ad::Index i = 0; i < a.rows(); ++i)
    for (ad::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != 0.0) edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if ((a(i, j) != 0.0) != (a(j, i) != 0.0)) symmetric = false;
    }
  const auto n = static_cast<std::size_t>(a.rows());
  return symmetric ? undirected(n, edges) : directed(n, edges);
}

Matrix adjacency(const Graph& g) {
  const auto n = static_cast<ad::Index>(g.size());
  Matrix a = Matrix::Zero(n, n);
  for (const auto& [i, j] : g.edges()) a(static_cast<ad::Index>(i), static_cast<ad::Index>(j)) = 1.0;
  return a;
}

NormalizedAdjacency normalize(const Graph& g) {
  if (g.is_directed()) throw ContractError("normalize: graph is directed; the normalization assumes symmetry");
  Matrix a = adjacency(g);
  a.diagonal().setOnes();
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  NormalizedAdjacency out;
  out.n = g.size();
  out.matrix = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
  return out;
}

std::set<std::size_t> neighbors(const Graph& g, std::size_t v) {
  if (v >= g.size())
    throw IndexError("neighbors: node " + std::to_string(v) + " outside [0, " + std::to_string(g.size()) + ")");
  std::set<std::size_t> out;
  for (const auto& [i, j] : g.edges()) {
    if (i == v) out.insert(j);
    if (j == v) out.insert(i);
  }
  return out;
}

Graph permute(const Graph& g, const std::vector<std::size_t>& perm) {
  if (perm.size() != g.size()) throw ShapeError("permute: permutation length differs from node count");
  std::vector<Edge> edges;
  for (const auto& [i, j] : g.edges()) edges.emplace_back(perm[i], perm[j]);
  return g.is_directed() ? Graph::directed(g.size(), edges) : Graph::undirected(g.size(), edges);
}

void GraphSequence::validate() const {
  if (timestamps.size() != graphs.size() || timestamps.size() != features.size())
    throw ContractError("graph sequence: " + std::to_string(timestamps.size()) + " timestamps, " +
                        std::to_string(graphs.size()) + " graphs, " + std::to_string(features.size()) +
                        " feature matrices");
  for (std::size_t k = 1; k < timestamps.size(); ++k)
    if (!(timestamps[k] > timestamps[k - 1]))
      throw ContractError("graph sequence: timestamp " + std::to_string(k) + " does not increase");
  for (std::size_t k = 0; k < graphs.size(); ++k)
    if (static_cast<ad::Index>(graphs[k].size()) != features[k].rows())
      throw ShapeError("graph sequence: step " + std::to_string(k) + " has " + std::to_string(graphs[k].size()) +
                       " nodes but " + std::to_string(features[k].rows()) + " feature rows");
}

bool GraphSequence::operator==(const GraphSequence& other) const {
  if (timestamps != other.timestamps || graphs != other.graphs || features.size() != other.features.size())
    return false;
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (features[k].rows() != other.features[k].rows() || features[k].cols() != other.features[k].cols())
      return false;
    if (features[k] != other.features[k]) return false;
  }
  return true;
}

std::vector<Edge> read_edge_list(std::istream& in, const std::string& source_name, std::size_t n) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long i = -1;
    long long j = -1;
    std::string rest;
    if (!(ls >> i >> j) || (ls >> rest))
      throw IoError(source_name + ":" + std::to_string(lineno) + ": expected \"i j\", got \"" + line + "\"");
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n)
      throw IoError(source_name + ":" + std::to_string(lineno) + ": node index outside [0, " + std::to_string(n) +
                    ")");
    edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return edges;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_edge_list(in, path.string(), n);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  for (const auto& [i, j] : g.edges()) {
    if (!g.is_directed() && i > j) continue;
    out << i << ' ' << j << '\n';
  }
}

void write_edge_list(const std::filesystem::path& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_edge_list(out, g);
}

}  // namespace gde::graph

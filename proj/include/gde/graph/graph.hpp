#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "gde/autodiff/ops.hpp"
#include "gde/autodiff/tape.hpp"

namespace gde::graph {

using ad::Matrix;
using Edge = std::pair<std::size_t, std::size_t>;

// Immutable node/edge set with 0-indexed nodes. Undirected graphs store both
// orientations of every edge; duplicate edges collapse.
class Graph {
 public:
  Graph() = default;

  static Graph undirected(std::size_t n, const std::vector<Edge>& edges);
  static Graph directed(std::size_t n, const std::vector<Edge>& edges);
  // Symmetric 0/1 matrix; the diagonal is read as self-loops.
  static Graph from_adjacency(const Matrix& a);

  std::size_t size() const { return n_; }
  bool is_directed() const { return directed_; }
  const std::set<Edge>& edges() const { return edges_; }
  bool has_edge(std::size_t i, std::size_t j) const { return edges_.count({i, j}) > 0; }

  bool operator==(const Graph& other) const = default;

 private:
  Graph(std::size_t n, std::set<Edge> edges, bool directed);

  std::size_t n_ = 0;
  std::set<Edge> edges_;
  bool directed_ = false;
};

// D^-1/2 (A + I) D^-1/2 for an undirected graph.
struct NormalizedAdjacency {
  std::size_t n = 0;
  Matrix matrix;

  std::shared_ptr<const ad::BlockOperator> as_operator() const { return ad::BlockOperator::single(matrix); }
};

// A[i][j] = 1 iff (i, j) is an edge.
Matrix adjacency(const Graph& g);

// Self-loops already present are merged with the added identity, so the
// diagonal of A + I is always exactly 1.
NormalizedAdjacency normalize(const Graph& g);

// Nodes adjacent to v through an edge in either orientation. v itself is
// included only when it carries a self-loop.
std::set<std::size_t> neighbors(const Graph& g, std::size_t v);

// Applies the node permutation perm (old index i becomes perm[i]).
Graph permute(const Graph& g, const std::vector<std::size_t>& perm);

// Time-indexed graph stream with per-timestamp node features.
struct GraphSequence {
  std::vector<double> timestamps;
  std::vector<Graph> graphs;
  std::vector<Matrix> features;

  std::size_t size() const { return timestamps.size(); }
  // Throws ContractError unless timestamps strictly increase and the three
  // lists have equal length.
  void validate() const;
  bool operator==(const GraphSequence& other) const;
};

// "i j" per line. Lines that are empty or start with '#' are skipped.
std::vector<Edge> read_edge_list(std::istream& in, const std::string& source_name, std::size_t n);
std::vector<Edge> read_edge_list(const std::filesystem::path& path, std::size_t n);
// Writes each undirected edge once (i <= j); directed graphs write every edge.
void write_edge_list(std::ostream& out, const Graph& g);
void write_edge_list(const std::filesystem::path& path, const Graph& g);

}  // namespace gde::graph

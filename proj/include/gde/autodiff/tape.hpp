#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace gde::ad {

// Dense row-major real matrix. All numerical work is done in double.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;
using NodeId = std::size_t;

std::string shape_string(const Matrix& m);
std::string shape_string(Index rows, Index cols);

class Tape;
struct Node;

// Handle to a value recorded on a tape. Cheap to copy; valid as long as the
// tape that produced it has not been rewound past it.
class Tensor {
 public:
  Tensor() = default;

  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  const Matrix& value() const;
  bool requires_grad() const;
  NodeId id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

// Accumulates this node's contribution into the gradients of its inputs.
// grad_in[i] is null when input i does not need a gradient.
using BackwardFn = std::function<void(const Tape& tape, const Node& self, const Matrix& grad_out,
                                      std::span<Matrix* const> grad_in)>;

struct Node {
  const char* op = "leaf";
  Matrix value;
  std::vector<NodeId> inputs;
  bool requires_grad = false;
  BackwardFn backward;
};

// Leaf gradients produced by one backward pass, keyed by node id.
class Gradients {
 public:
  bool contains(const Tensor& t) const { return grads_.count(t.id()) > 0; }
  const Matrix& operator[](const Tensor& t) const;
  const std::unordered_map<NodeId, Matrix>& map() const { return grads_; }

 private:
  friend class Tape;
  std::unordered_map<NodeId, Matrix> grads_;
};

// Append-only record of a define-by-run computation. Rebuilt for every
// forward pass. Nodes are stored in a deque so references to recorded values
// stay valid while the tape grows.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor variable(Matrix value) { return leaf(std::move(value), true); }
  Tensor constant(Matrix value) { return leaf(std::move(value), false); }
  Tensor leaf(Matrix value, bool requires_grad);

  // Records an operation output. The backward function is dropped when no
  // input needs a gradient.
  Tensor record(const char* op, Matrix value, std::initializer_list<Tensor> inputs,
                BackwardFn backward);
  Tensor record(const char* op, Matrix value, std::span<const Tensor> inputs,
                BackwardFn backward);

  const Node& node(NodeId id) const { return nodes_[id]; }
  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }

  // Rewinding drops every node recorded after the mark.
  std::size_t mark() const { return nodes_.size(); }
  void rewind(std::size_t mark);

  // Reverse sweep from a 1x1 loss. The tape is left untouched so it can be
  // inspected or differentiated again.
  Gradients backward(const Tensor& loss) const;

 private:
  std::deque<Node> nodes_;
};

}  // namespace gde::ad

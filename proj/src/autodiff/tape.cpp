#include "gde/autodiff/tape.hpp"

#include <sstream>

#include "gde/errors.hpp"

namespace gde::ad {

std::string shape_string(Index rows, Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

std::string shape_string(const Matrix& m) { return shape_string(m.rows(), m.cols()); }

const Matrix& Tensor::value() const {
  if (tape_ == nullptr) throw ContractError("use of an unbound tensor handle");
  return tape_->value(id_);
}

bool Tensor::requires_grad() const { return tape_ != nullptr && tape_->node(id_).requires_grad; }

const Matrix& Gradients::operator[](const Tensor& t) const {
  auto it = grads_.find(t.id());
  if (it == grads_.end()) throw ContractError("no gradient recorded for node " + std::to_string(t.id()));
  return it->second;
}

Tensor Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(const char* op, Matrix value, std::initializer_list<Tensor> inputs,
                    BackwardFn backward) {
  return record(op, std::move(value), std::span<const Tensor>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Tensor Tape::record(const char* op, Matrix value, std::span<const Tensor> inputs,
                    BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (&in.tape() != this) throw ContractError(std::string(op) + ": operand recorded on another tape");
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

void Tape::rewind(std::size_t mark) {
  if (mark > nodes_.size()) throw ContractError("rewind past the end of the tape");
  nodes_.resize(mark);
}

Gradients Tape::backward(const Tensor& loss) const {
  if (&loss.tape() != this) throw ContractError("backward: loss is not on this tape");
  const Matrix& lv = loss.value();
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ContractError("backward: loss must be 1x1, got " + shape_string(lv));

  const NodeId top = loss.id();
  std::vector<Matrix> grads(top + 1);
  std::vector<char> has(top + 1, 0);
  grads[top] = Matrix::Ones(1, 1);
  has[top] = 1;

  std::vector<Matrix*> slots;
  for (NodeId i = top + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!n.requires_grad || !has[i] || !n.backward) continue;
    slots.assign(n.inputs.size(), nullptr);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const NodeId in = n.inputs[k];
      if (!nodes_[in].requires_grad) continue;
      if (!has[in]) {
        grads[in] = Matrix::Zero(nodes_[in].value.rows(), nodes_[in].value.cols());
        has[in] = 1;
      }
      slots[k] = &grads[in];
    }
    n.backward(*this, n, grads[i], slots);
  }

  Gradients out;
  for (NodeId i = 0; i <= top; ++i) {
    const Node& n = nodes_[i];
    if (!n.requires_grad || !n.inputs.empty()) continue;
    if (has[i]) {
      out.grads_.emplace(i, std::move(grads[i]));
    } else {
      out.grads_.emplace(i, Matrix::Zero(n.value.rows(), n.value.cols()));
    }
  }
  return out;
}

}  // namespace gde::ad

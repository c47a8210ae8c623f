#include "gde/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gde/errors.hpp"

namespace gde::ad {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.value()) + " vs " +
                     shape_string(b.value()));
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

const Matrix& input_value(const Tape& tape, const Node& self, std::size_t k) {
  return tape.value(self.inputs[k]);
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "none" || name == "linear" || name.empty()) return Activation::none;
  if (name == "relu") return Activation::relu;
  if (name == "softplus") return Activation::softplus;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ContractError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::softplus: return "softplus";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "none";
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.value()) + " x " +
                     shape_string(b.value()));
  Matrix out = a.value() * b.value();
  return a.tape().record("matmul", std::move(out), {a, b},
                         [](const Tape& t, const Node& self, const Matrix& g, std::span<Matrix* const> gin) {
                           if (gin[0]) gin[0]->noalias() += g * input_value(t, self, 1).transpose();
                           if (gin[1]) gin[1]->noalias() += input_value(t, self, 0).transpose() * g;
                         });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Matrix out = a.value() + b.value();
  return a.tape().record("add", std::move(out), {a, b},
                         [](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           if (gin[0]) *gin[0] += g;
                           if (gin[1]) *gin[1] += g;
                         });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Matrix out = a.value() - b.value();
  return a.tape().record("sub", std::move(out), {a, b},
                         [](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           if (gin[0]) *gin[0] += g;
                           if (gin[1]) *gin[1] -= g;
                         });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape("hadamard", a, b);
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape().record("hadamard", std::move(out), {a, b},
                         [](const Tape& t, const Node& self, const Matrix& g, std::span<Matrix* const> gin) {
                           if (gin[0]) *gin[0] += g.cwiseProduct(input_value(t, self, 1));
                           if (gin[1]) *gin[1] += g.cwiseProduct(input_value(t, self, 0));
                         });
}

Tensor scale(const Tensor& a, double c) {
  Matrix out = a.value() * c;
  return a.tape().record("scale", std::move(out), {a},
                         [c](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           *gin[0] += c * g;
                         });
}

Tensor one_minus(const Tensor& a) {
  Matrix out = (1.0 - a.value().array()).matrix();
  return a.tape().record("one_minus", std::move(out), {a},
                         [](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           *gin[0] -= g;
                         });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = a.value().unaryExpr(&sigmoid_scalar);
  return a.tape().record("sigmoid", std::move(out), {a},
                         [](const Tape&, const Node& self, const Matrix& g, std::span<Matrix* const> gin) {
                           const auto y = self.value.array();
                           *gin[0] += (g.array() * y * (1.0 - y)).matrix();
                         });
}

Tensor tanh(const Tensor& a) {
  Matrix out = a.value().array().tanh().matrix();
  return a.tape().record("tanh", std::move(out), {a},
                         [](const Tape&, const Node& self, const Matrix& g, std::span<Matrix* const> gin) {
                           const auto y = self.value.array();
                           *gin[0] += (g.array() * (1.0 - y * y)).matrix();
                         });
}

Tensor relu(const Tensor& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape().record("relu", std::move(out), {a},
                         [](const Tape& t, const Node& self, const Matrix& g, std::span<Matrix* const> gin) {
                           const auto x = input_value(t, self, 0).array();
                           *gin[0] += (x > 0.0).select(g.array(), 0.0).matrix();
                         });
}

Tensor softplus(const Tensor& a) {
  Matrix out = a.value().unaryExpr(&softplus_scalar);
  return a.tape().record("softplus", std::move(out), {a},
                         [](const Tape& t, const Node& self, const Matrix& g, std::span<Matrix* const> gin) {
                           const Matrix s = input_value(t, self, 0).unaryExpr(&sigmoid_scalar);
                           *gin[0] += g.cwiseProduct(s);
                         });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
  return a.tape().record("leaky_relu", std::move(out), {a},
                         [slope](const Tape& t, const Node& self, const Matrix& g, std::span<Matrix* const> gin) {
                           const auto x = input_value(t, self, 0).array();
                           *gin[0] += (x > 0.0).select(g.array(), slope * g.array()).matrix();
                         });
}

Tensor activate(Activation act, const Tensor& a) {
  switch (act) {
    case Activation::none: return a;
    case Activation::relu: return relu(a);
    case Activation::softplus: return softplus(a);
    case Activation::tanh: return tanh(a);
    case Activation::sigmoid: return sigmoid(a);
  }
  return a;
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw ShapeError("add_bias: bias " + shape_string(bias.value()) + " does not fit " +
                     shape_string(a.value()));
  Matrix out = a.value().rowwise() + bias.value().row(0);
  return a.tape().record("add_bias", std::move(out), {a, bias},
                         [](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           if (gin[0]) *gin[0] += g;
                           if (gin[1]) *gin[1] += g.colwise().sum();
                         });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record("sum", std::move(out), {a},
                         [](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           gin[0]->array() += g(0, 0);
                         });
}

Tensor mean(const Tensor& a) {
  const double count = static_cast<double>(a.value().size());
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / count;
  return a.tape().record("mean", std::move(out), {a},
                         [count](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           gin[0]->array() += g(0, 0) / count;
                         });
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  require_same_shape("mse", pred, target);
  const double count = static_cast<double>(pred.value().size());
  Matrix out(1, 1);
  out(0, 0) = (pred.value() - target.value()).squaredNorm() / count;
  return pred.tape().record(
      "mse", std::move(out), {pred, target},
      [count](const Tape& t, const Node& self, const Matrix& g, std::span<Matrix* const> gin) {
        const Matrix diff = (input_value(t, self, 0) - input_value(t, self, 1)) * (2.0 * g(0, 0) / count);
        if (gin[0]) *gin[0] += diff;
        if (gin[1]) *gin[1] -= diff;
      });
}

Tensor lincomb(std::span<const Tensor> terms, std::span<const double> coeffs) {
  if (terms.empty() || terms.size() != coeffs.size())
    throw ContractError("lincomb: need one coefficient per term");
  Matrix out = terms[0].value() * coeffs[0];
  for (std::size_t i = 1; i < terms.size(); ++i) {
    require_same_shape("lincomb", terms[0], terms[i]);
    if (coeffs[i] != 0.0) out.noalias() += coeffs[i] * terms[i].value();
  }
  std::vector<double> c(coeffs.begin(), coeffs.end());
  return terms[0].tape().record("lincomb", std::move(out), terms,
                                [c = std::move(c)](const Tape&, const Node&, const Matrix& g,
                                                   std::span<Matrix* const> gin) {
                                  for (std::size_t i = 0; i < gin.size(); ++i)
                                    if (gin[i] && c[i] != 0.0) gin[i]->noalias() += c[i] * g;
                                });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw ShapeError("concat_cols: row counts differ, " + shape_string(a.value()) + " vs " +
                     shape_string(b.value()));
  const Index ca = a.cols();
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(ca) = a.value();
  out.rightCols(b.cols()) = b.value();
  return a.tape().record("concat_cols", std::move(out), {a, b},
                         [ca](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           if (gin[0]) *gin[0] += g.leftCols(ca);
                           if (gin[1]) *gin[1] += g.rightCols(g.cols() - ca);
                         });
}

Tensor slice_cols(const Tensor& a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols())
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + shape_string(a.value()));
  Matrix out = a.value().middleCols(begin, count);
  return a.tape().record("slice_cols", std::move(out), {a},
                         [begin, count](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           gin[0]->middleCols(begin, count) += g;
                         });
}

Tensor reshape(const Tensor& a, Index rows, Index cols) {
  if (rows * cols != a.value().size())
    throw ShapeError("reshape: cannot view " + shape_string(a.value()) + " as " + shape_string(rows, cols));
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  const Index r0 = a.rows();
  const Index c0 = a.cols();
  return a.tape().record("reshape", std::move(out), {a},
                         [r0, c0](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           *gin[0] += Eigen::Map<const Matrix>(g.data(), r0, c0);
                         });
}

std::shared_ptr<const BlockOperator> BlockOperator::single(Matrix m) {
  std::vector<Matrix> blocks;
  blocks.push_back(std::move(m));
  return stack(std::move(blocks));
}

std::shared_ptr<const BlockOperator> BlockOperator::stack(std::vector<Matrix> blocks) {
  auto op = std::make_shared<BlockOperator>();
  Index offset = 0;
  for (const auto& b : blocks) {
    if (b.rows() != b.cols()) throw ShapeError("BlockOperator: block " + shape_string(b) + " is not square");
    op->offsets.push_back(offset);
    offset += b.rows();
  }
  op->rows = offset;
  op->blocks = std::move(blocks);
  return op;
}

Tensor propagate(const std::shared_ptr<const BlockOperator>& op, const Tensor& h) {
  if (h.rows() != op->rows)
    throw ShapeError("propagate: operator acts on " + std::to_string(op->rows) + " rows, features are " +
                     shape_string(h.value()));
  Matrix out(h.rows(), h.cols());
  for (std::size_t b = 0; b < op->blocks.size(); ++b) {
    const Index n = op->blocks[b].rows();
    out.middleRows(op->offsets[b], n).noalias() = op->blocks[b] * h.value().middleRows(op->offsets[b], n);
  }
  return h.tape().record("propagate", std::move(out), {h},
                         [op](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           for (std::size_t b = 0; b < op->blocks.size(); ++b) {
                             const Index n = op->blocks[b].rows();
                             gin[0]->middleRows(op->offsets[b], n).noalias() +=
                                 op->blocks[b].transpose() * g.middleRows(op->offsets[b], n);
                           }
                         });
}

Tensor gather_rows(const Tensor& a, std::shared_ptr<const std::vector<Index>> index) {
  Matrix out(static_cast<Index>(index->size()), a.cols());
  for (std::size_t e = 0; e < index->size(); ++e) {
    const Index r = (*index)[e];
    if (r < 0 || r >= a.rows()) throw IndexError("gather_rows: row " + std::to_string(r) + " out of range");
    out.row(static_cast<Index>(e)) = a.value().row(r);
  }
  return a.tape().record("gather_rows", std::move(out), {a},
                         [index](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           for (std::size_t e = 0; e < index->size(); ++e)
                             gin[0]->row((*index)[e]) += g.row(static_cast<Index>(e));
                         });
}

Tensor scatter_add_rows(const Tensor& a, std::shared_ptr<const std::vector<Index>> index, Index rows) {
  if (static_cast<Index>(index->size()) != a.rows())
    throw ShapeError("scatter_add_rows: " + std::to_string(index->size()) + " indices for " +
                     shape_string(a.value()));
  Matrix out = Matrix::Zero(rows, a.cols());
  for (std::size_t e = 0; e < index->size(); ++e) {
    const Index r = (*index)[e];
    if (r < 0 || r >= rows) throw IndexError("scatter_add_rows: row " + std::to_string(r) + " out of range");
    out.row(r) += a.value().row(static_cast<Index>(e));
  }
  return a.tape().record("scatter_add_rows", std::move(out), {a},
                         [index](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           for (std::size_t e = 0; e < index->size(); ++e)
                             gin[0]->row(static_cast<Index>(e)) += g.row((*index)[e]);
                         });
}

Tensor outer_sum(const Tensor& a, const Tensor& b) {
  if (a.cols() != 1 || b.cols() != 1)
    throw ShapeError("outer_sum: expects column vectors, got " + shape_string(a.value()) + " and " +
                     shape_string(b.value()));
  Matrix out = a.value().replicate(1, b.rows()) + b.value().transpose().replicate(a.rows(), 1);
  return a.tape().record("outer_sum", std::move(out), {a, b},
                         [](const Tape&, const Node&, const Matrix& g, std::span<Matrix* const> gin) {
                           if (gin[0]) *gin[0] += g.rowwise().sum();
                           if (gin[1]) *gin[1] += g.colwise().sum().transpose();
                         });
}

Tensor masked_softmax_rows(const Tensor& logits, std::shared_ptr<const Matrix> mask) {
  const Matrix& x = logits.value();
  if (mask->rows() != x.rows() || mask->cols() != x.cols())
    throw ShapeError("masked_softmax_rows: mask " + shape_string(*mask) + " vs logits " + shape_string(x));
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < x.cols(); ++j)
      if ((*mask)(i, j) != 0.0) mx = std::max(mx, x(i, j));
    if (!std::isfinite(mx)) throw ContractError("masked_softmax_rows: row " + std::to_string(i) + " fully masked");
    double z = 0.0;
    for (Index j = 0; j < x.cols(); ++j)
      if ((*mask)(i, j) != 0.0) {
        out(i, j) = std::exp(x(i, j) - mx);
        z += out(i, j);
      }
    out.row(i) /= z;
  }
  return logits.tape().record("masked_softmax_rows", std::move(out), {logits},
                              [](const Tape&, const Node& self, const Matrix& g, std::span<Matrix* const> gin) {
                                const Matrix& y = self.value;
                                const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
                                *gin[0] += (y.array() * (g.colwise() - dot).array()).matrix();
                              });
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             const std::vector<char>& rows_mask) {
  const Matrix& x = logits.value();
  if (static_cast<Index>(labels.size()) != x.rows() || static_cast<Index>(rows_mask.size()) != x.rows())
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " + shape_string(x));
  Matrix probs = softmax_rows(x);
  double total = 0.0;
  double count = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    if (!rows_mask[static_cast<std::size_t>(i)]) continue;
    const int c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= x.cols()) throw IndexError("softmax_cross_entropy: label " + std::to_string(c) + " out of range");
    total -= std::log(std::max(probs(i, c), 1e-300));
    count += 1.0;
  }
  if (count == 0.0) throw ContractError("softmax_cross_entropy: empty mask");
  Matrix out(1, 1);
  out(0, 0) = total / count;
  return logits.tape().record(
      "softmax_cross_entropy", std::move(out), {logits},
      [probs = std::move(probs), labels, rows_mask, count](const Tape&, const Node&, const Matrix& g,
                                                           std::span<Matrix* const> gin) {
        const double w = g(0, 0) / count;
        for (Index i = 0; i < probs.rows(); ++i) {
          if (!rows_mask[static_cast<std::size_t>(i)]) continue;
          gin[0]->row(i) += w * probs.row(i);
          (*gin[0])(i, labels[static_cast<std::size_t>(i)]) -= w;
        }
      });
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace gde::ad

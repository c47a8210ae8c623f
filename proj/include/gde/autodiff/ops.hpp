#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "gde/autodiff/tape.hpp"

namespace gde::ad {

enum class Activation { none, relu, softplus, tanh, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// 1 - a, used by gated cells.
Tensor one_minus(const Tensor& a);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
// max(x,0) + log1p(exp(-|x|)); derivative is the logistic sigmoid.
Tensor softplus(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor activate(Activation act, const Tensor& a);

// Adds a 1xN row to every row of an MxN tensor.
Tensor add_bias(const Tensor& a, const Tensor& bias);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor mse(const Tensor& pred, const Tensor& target);

// sum_i coeffs[i] * terms[i]; all terms share one shape.
Tensor lincomb(std::span<const Tensor> terms, std::span<const double> coeffs);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, Index begin, Index count);
// Row-major reinterpretation; rows*cols must be preserved.
Tensor reshape(const Tensor& a, Index rows, Index cols);

// Block-diagonal constant operator. Block b acts on rows
// [offsets[b], offsets[b] + blocks[b].rows()).
struct BlockOperator {
  std::vector<Matrix> blocks;
  std::vector<Index> offsets;
  Index rows = 0;

  static std::shared_ptr<const BlockOperator> single(Matrix m);
  static std::shared_ptr<const BlockOperator> stack(std::vector<Matrix> blocks);
};

// op * h, where op is block diagonal and not differentiated.
Tensor propagate(const std::shared_ptr<const BlockOperator>& op, const Tensor& h);

// out[e] = a[index[e]].
Tensor gather_rows(const Tensor& a, std::shared_ptr<const std::vector<Index>> index);
// out[index[e]] += a[e], out has `rows` rows.
Tensor scatter_add_rows(const Tensor& a, std::shared_ptr<const std::vector<Index>> index, Index rows);

// out(v,u) = a(v) + b(u) for column vectors a, b.
Tensor outer_sum(const Tensor& a, const Tensor& b);
// Row-wise softmax restricted to entries where mask != 0. Masked-out entries
// are exactly zero. Every row must have at least one unmasked entry.
Tensor masked_softmax_rows(const Tensor& logits, std::shared_ptr<const Matrix> mask);

// Mean cross-entropy of row-wise softmax(logits) over rows with rows_mask set.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             const std::vector<char>& rows_mask);

// Plain value helpers (no tape).
Matrix softmax_rows(const Matrix& logits);
bool all_finite(const Matrix& m);

}  // namespace gde::ad

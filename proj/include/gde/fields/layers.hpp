#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gde/autodiff/ops.hpp"
#include "gde/autodiff/parameters.hpp"

namespace gde::fields {

using ad::Activation;
using ad::Binding;
using ad::Index;
using ad::Matrix;
using ad::ParameterSet;
using ad::Tensor;
using GraphOperator = std::shared_ptr<const ad::BlockOperator>;

// Right-hand side of an ODE on node features: (depth s, state H) -> dH/ds.
using VectorField = std::function<Tensor(double s, const Tensor& h)>;

// Width/activation pair parsed from "64:softplus".
struct LayerSpec {
  Index width = 0;
  Activation activation = Activation::none;
};

// Parses a comma separated list such as "64:softplus,64:none".
std::vector<LayerSpec> parse_layer_specs(std::string_view text);
std::string format_layer_specs(const std::vector<LayerSpec>& specs);

// act(L (drop(H)) W + b).
struct GCNLayer {
  std::string weight;
  std::string bias;  // empty: no bias
  Index in = 0;
  Index out = 0;
  Activation activation = Activation::none;
  double dropout = 0.0;

  static GCNLayer create(ParameterSet& params, const std::string& name, Index in, Index out, Activation act,
                         bool with_bias, double dropout, std::mt19937_64& rng);

  // mask: inverted-dropout multipliers with H's shape, or null to skip dropout.
  Tensor forward(const Binding& b, const GraphOperator& op, const Tensor& h, const Matrix* mask = nullptr) const;
};

// act(drop(H) W + b), applied row by row.
struct DenseLayer {
  std::string weight;
  std::string bias;
  Index in = 0;
  Index out = 0;
  Activation activation = Activation::none;

  static DenseLayer create(ParameterSet& params, const std::string& name, Index in, Index out, Activation act,
                           bool with_bias, std::mt19937_64& rng);

  Tensor forward(const Binding& b, const Tensor& h) const;
};

// Dropout multipliers for one forward pass. They are sampled once and reused
// by every field evaluation inside that pass, so the field seen by the
// solver stays deterministic.
struct DropoutMasks {
  std::vector<std::optional<Matrix>> per_layer;

  const Matrix* get(std::size_t layer) const {
    return layer < per_layer.size() && per_layer[layer] ? &*per_layer[layer] : nullptr;
  }
};

Matrix sample_dropout_mask(Index rows, Index cols, double rate, std::mt19937_64& rng);
DropoutMasks sample_dropout_masks(const std::vector<GCNLayer>& layers, Index rows, std::mt19937_64& rng);

// Applies a stack of GCN layers.
Tensor gcn_stack(const std::vector<GCNLayer>& layers, const Binding& b, const GraphOperator& op, const Tensor& h,
                 const DropoutMasks* masks = nullptr);
Tensor dense_stack(const std::vector<DenseLayer>& layers, const Binding& b, const Tensor& h);

}  // namespace gde::fields

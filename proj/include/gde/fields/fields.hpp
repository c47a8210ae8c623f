#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gde/fields/layers.hpp"
#include "gde/graph/graph.hpp"

namespace gde::fields {

// Graph convolution field: a stack of GCN layers on the normalized
// adjacency. Input and output widths must agree.
struct GCDEField {
  std::vector<GCNLayer> layers;

  // Builds `specs` on top of `width`; the last spec's width must equal width.
  static GCDEField create(ParameterSet& params, const std::string& name, Index width,
                          const std::vector<LayerSpec>& specs, bool with_bias, double dropout,
                          std::mt19937_64& rng);

  Index width() const { return layers.empty() ? 0 : layers.front().in; }

  Tensor operator()(const Binding& b, const GraphOperator& op, const Tensor& h,
                    const DropoutMasks* masks = nullptr) const;

  // Autonomous: the returned field ignores s. The binding, operator and
  // masks must outlive the returned callable.
  VectorField bind(const Binding& b, GraphOperator op, const DropoutMasks* masks = nullptr) const;
};

// One-shot evaluation of the GCDE field at H.
Tensor gcde_field(const Tensor& h, const graph::NormalizedAdjacency& adj, const GCDEField& field, const Binding& b);

using MessageFn = std::function<Tensor(const Tensor& receiver, const Tensor& sender)>;
using UpdateFn = std::function<Tensor(const Tensor& aggregated)>;

// dh_v = update(sum_{u in N(v)} message(h_v, h_u)). Messages are computed for
// all (v, u) pairs in one batch: row e of both operands belongs to pair e.
Tensor gmde_field(const Tensor& h, const graph::Graph& g, const MessageFn& message, const UpdateFn& update);

// Learnable message passing field:
// message(a, b) = act_m([a | b] W_m + b_m), update(x) = act_u(x W_u + b_u).
struct GMDEField {
  DenseLayer message;
  DenseLayer update;

  static GMDEField create(ParameterSet& params, const std::string& name, Index width, Index message_width,
                          Activation message_act, Activation update_act, std::mt19937_64& rng);

  Tensor operator()(const Binding& b, const graph::Graph& g, const Tensor& h) const;
};

// Single-head attention field:
// dh_v = act(sum_{u in N(v) + v} alpha_vu (h_u W)),
// alpha_v = softmax_u(LeakyReLU_0.2(a_recv . (h_v W) + a_send . (h_u W))).
struct GADEField {
  std::string weight;
  std::string attn_receiver;
  std::string attn_sender;
  Index width = 0;
  Activation activation = Activation::softplus;
  double negative_slope = 0.2;

  static GADEField create(ParameterSet& params, const std::string& name, Index width, Activation act,
                          std::mt19937_64& rng);

  Tensor operator()(const Binding& b, const graph::Graph& g, const Tensor& h) const;
  // Attention coefficients at H (row v holds alpha_v.).
  Tensor attention(const Binding& b, const graph::Graph& g, const Tensor& h) const;
};

Tensor gade_field(const Tensor& h, const graph::Graph& g, const GADEField& field, const Binding& b);

// Self loops plus both edge orientations: the support of the attention rows.
Matrix attention_support(const graph::Graph& g);

// Second-order dynamics on a state laid out as [H | dH]. The base field maps
// the full 2h-wide state to the h-wide acceleration; the wrapped field
// returns [dH | base(state)].
class SecondOrderField {
 public:
  SecondOrderField(VectorField base, Index half_width);

  Tensor operator()(double s, const Tensor& state) const;
  VectorField as_field() const;
  Index half_width() const { return half_; }

 private:
  VectorField base_;
  Index half_;
};

SecondOrderField second_order_wrap(VectorField base, Index half_width);

// Output map Y = K(H): affine by default.
struct OutputHead {
  std::vector<DenseLayer> layers;

  static OutputHead affine(ParameterSet& params, const std::string& name, Index in, Index out,
                           std::mt19937_64& rng);
  // Hidden layer with activation followed by a linear layer.
  static OutputHead two_layer(ParameterSet& params, const std::string& name, Index in, Index hidden, Index out,
                              Activation act, std::mt19937_64& rng);

  Tensor operator()(const Binding& b, const Tensor& h) const;
};

Tensor output_head(const Tensor& h, const OutputHead& head, const Binding& b);

}  // namespace gde::fields

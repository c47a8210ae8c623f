#include "gde/fields/fields.hpp"

#include "gde/errors.hpp"

namespace gde::fields {

GCDEField GCDEField::create(ParameterSet& params, const std::string& name, Index width,
                            const std::vector<LayerSpec>& specs, bool with_bias, double dropout,
                            std::mt19937_64& rng) {
  if (specs.empty()) throw ConfigError("field '" + name + "' needs at least one layer");
  if (specs.back().width != width)
    throw ConfigError("field '" + name + "' must end at width " + std::to_string(width) + ", ends at " +
                      std::to_string(specs.back().width));
  GCDEField f;
  Index in = width;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    f.layers.push_back(GCNLayer::create(params, name + "." + std::to_string(i), in, specs[i].width,
                                        specs[i].activation, with_bias, dropout, rng));
    in = specs[i].width;
  }
  return f;
}

Tensor GCDEField::operator()(const Binding& b, const GraphOperator& op, const Tensor& h,
                             const DropoutMasks* masks) const {
  if (h.cols() != width())
    throw ShapeError("GCDE field: state width " + std::to_string(h.cols()) + " differs from field width " +
                     std::to_string(width()));
  return gcn_stack(layers, b, op, h, masks);
}

VectorField GCDEField::bind(const Binding& b, GraphOperator op, const DropoutMasks* masks) const {
  return [this, &b, op = std::move(op), masks](double, const Tensor& h) { return (*this)(b, op, h, masks); };
}

Tensor gcde_field(const Tensor& h, const graph::NormalizedAdjacency& adj, const GCDEField& field, const Binding& b) {
  return field(b, adj.as_operator(), h);
}

Tensor gmde_field(const Tensor& h, const graph::Graph& g, const MessageFn& message, const UpdateFn& update) {
  if (static_cast<std::size_t>(h.rows()) != g.size())
    throw ShapeError("GMDE field: " + std::to_string(g.size()) + " nodes, features " + ad::shape_string(h.value()));
  auto receivers = std::make_shared<std::vector<Index>>();
  auto senders = std::make_shared<std::vector<Index>>();
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::size_t u : graph::neighbors(g, v)) {
      receivers->push_back(static_cast<Index>(v));
      senders->push_back(static_cast<Index>(u));
    }
  ad::Tape& tape = h.tape();
  Tensor aggregated;
  if (receivers->empty()) {
    // No edges at all; message shape is unknown until evaluated, so probe it
    // on a one-row batch to learn the message width.
    Tensor probe_v = ad::gather_rows(h, std::make_shared<std::vector<Index>>(1, 0));
    const Index width = message(probe_v, probe_v).cols();
    aggregated = tape.constant(Matrix::Zero(h.rows(), width));
  } else {
    Tensor hv = ad::gather_rows(h, receivers);
    Tensor hu = ad::gather_rows(h, senders);
    aggregated = ad::scatter_add_rows(message(hv, hu), receivers, h.rows());
  }
  return update(aggregated);
}

GMDEField GMDEField::create(ParameterSet& params, const std::string& name, Index width, Index message_width,
                            Activation message_act, Activation update_act, std::mt19937_64& rng) {
  GMDEField f;
  f.message = DenseLayer::create(params, name + ".message", 2 * width, message_width, message_act, true, rng);
  f.update = DenseLayer::create(params, name + ".update", message_width, width, update_act, true, rng);
  return f;
}

Tensor GMDEField::operator()(const Binding& b, const graph::Graph& g, const Tensor& h) const {
  return gmde_field(
      h, g, [&](const Tensor& recv, const Tensor& send) { return message.forward(b, ad::concat_cols(recv, send)); },
      [&](const Tensor& agg) { return update.forward(b, agg); });
}

Matrix attention_support(const graph::Graph& g) {
  const auto n = static_cast<Index>(g.size());
  Matrix mask = Matrix::Identity(n, n);
  for (const auto& [i, j] : g.edges()) {
    mask(static_cast<Index>(i), static_cast<Index>(j)) = 1.0;
    mask(static_cast<Index>(j), static_cast<Index>(i)) = 1.0;
  }
  return mask;
}

GADEField GADEField::create(ParameterSet& params, const std::string& name, Index width, Activation act,
                            std::mt19937_64& rng) {
  GADEField f;
  f.weight = name + ".weight";
  f.attn_receiver = name + ".attn_receiver";
  f.attn_sender = name + ".attn_sender";
  f.width = width;
  f.activation = act;
  params.add_glorot(f.weight, width, width, rng);
  params.add_glorot(f.attn_receiver, width, 1, rng);
  params.add_glorot(f.attn_sender, width, 1, rng);
  return f;
}

Tensor GADEField::attention(const Binding& b, const graph::Graph& g, const Tensor& h) const {
  if (h.cols() != width || static_cast<std::size_t>(h.rows()) != g.size())
    throw ShapeError("GADE field: expects " + std::to_string(g.size()) + "x" + std::to_string(width) + ", got " +
                     ad::shape_string(h.value()));
  Tensor s = ad::matmul(h, b[weight]);
  Tensor logits = ad::outer_sum(ad::matmul(s, b[attn_receiver]), ad::matmul(s, b[attn_sender]));
  logits = ad::leaky_relu(logits, negative_slope);
  return ad::masked_softmax_rows(logits, std::make_shared<const Matrix>(attention_support(g)));
}

Tensor GADEField::operator()(const Binding& b, const graph::Graph& g, const Tensor& h) const {
  Tensor alpha = attention(b, g, h);
  return ad::activate(activation, ad::matmul(alpha, ad::matmul(h, b[weight])));
}

Tensor gade_field(const Tensor& h, const graph::Graph& g, const GADEField& field, const Binding& b) {
  return field(b, g, h);
}

SecondOrderField::SecondOrderField(VectorField base, Index half_width) : base_(std::move(base)), half_(half_width) {
  if (half_width <= 0) throw ContractError("second-order field needs a positive half width");
}

Tensor SecondOrderField::operator()(double s, const Tensor& state) const {
  if (state.cols() != 2 * half_)
    throw ShapeError("second-order field: state width " + std::to_string(state.cols()) + ", expected " +
                     std::to_string(2 * half_));
  Tensor accel = base_(s, state);
  if (accel.cols() != half_ || accel.rows() != state.rows())
    throw ShapeError("second-order field: base returned " + ad::shape_string(accel.value()) + ", expected width " +
                     std::to_string(half_));
  return ad::concat_cols(ad::slice_cols(state, half_, half_), accel);
}

VectorField SecondOrderField::as_field() const {
  return [self = *this](double s, const Tensor& state) { return self(s, state); };
}

SecondOrderField second_order_wrap(VectorField base, Index half_width) {
  return SecondOrderField(std::move(base), half_width);
}

OutputHead OutputHead::affine(ParameterSet& params, const std::string& name, Index in, Index out,
                              std::mt19937_64& rng) {
  OutputHead h;
  h.layers.push_back(DenseLayer::create(params, name + ".0", in, out, Activation::none, true, rng));
  return h;
}

OutputHead OutputHead::two_layer(ParameterSet& params, const std::string& name, Index in, Index hidden, Index out,
                                 Activation act, std::mt19937_64& rng) {
  OutputHead h;
  h.layers.push_back(DenseLayer::create(params, name + ".0", in, hidden, act, true, rng));
  h.layers.push_back(DenseLayer::create(params, name + ".1", hidden, out, Activation::none, true, rng));
  return h;
}

Tensor OutputHead::operator()(const Binding& b, const Tensor& h) const { return dense_stack(layers, b, h); }

Tensor output_head(const Tensor& h, const OutputHead& head, const Binding& b) { return head(b, h); }

}  // namespace gde::fields

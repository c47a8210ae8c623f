#include "gde/fields/layers.hpp"

#include <charconv>
#include <sstream>

#include "gde/errors.hpp"

namespace gde::fields {

std::vector<LayerSpec> parse_layer_specs(std::string_view text) {
  std::vector<LayerSpec> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) throw ConfigError("layer list '" + std::string(text) + "' has an empty entry");
    const std::size_t colon = item.find(':');
    const std::string_view width = item.substr(0, colon);
    LayerSpec spec;
    auto [ptr, ec] = std::from_chars(width.data(), width.data() + width.size(), spec.width);
    if (ec != std::errc() || ptr != width.data() + width.size() || spec.width <= 0)
      throw ConfigError("layer list entry '" + std::string(item) + "' has no positive width");
    if (colon != std::string_view::npos) {
      try {
        spec.activation = ad::parse_activation(item.substr(colon + 1));
      } catch (const ContractError& e) {
        throw ConfigError(e.what());
      }
    }
    out.push_back(spec);
    pos = comma + 1;
  }
  return out;
}

std::string format_layer_specs(const std::vector<LayerSpec>& specs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i) os << ',';
    os << specs[i].width << ':' << ad::to_string(specs[i].activation);
  }
  return os.str();
}

GCNLayer GCNLayer::create(ParameterSet& params, const std::string& name, Index in, Index out, Activation act,
                          bool with_bias, double dropout, std::mt19937_64& rng) {
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("GCN dropout must lie in [0, 1)");
  GCNLayer l;
  l.weight = name + ".weight";
  params.add_glorot(l.weight, in, out, rng);
  if (with_bias) {
    l.bias = name + ".bias";
    params.add_zeros(l.bias, 1, out);
  }
  l.in = in;
  l.out = out;
  l.activation = act;
  l.dropout = dropout;
  return l;
}

Tensor GCNLayer::forward(const Binding& b, const GraphOperator& op, const Tensor& h, const Matrix* mask) const {
  if (h.cols() != in)
    throw ShapeError("GCN layer " + weight + ": expects width " + std::to_string(in) + ", got " +
                     ad::shape_string(h.value()));
  Tensor x = h;
  if (mask != nullptr) x = ad::hadamard(x, h.tape().constant(*mask));
  Tensor y = ad::matmul(x, b[weight]);
  y = ad::propagate(op, y);
  if (!bias.empty()) y = ad::add_bias(y, b[bias]);
  return ad::activate(activation, y);
}

DenseLayer DenseLayer::create(ParameterSet& params, const std::string& name, Index in, Index out, Activation act,
                              bool with_bias, std::mt19937_64& rng) {
  DenseLayer l;
  l.weight = name + ".weight";
  params.add_glorot(l.weight, in, out, rng);
  if (with_bias) {
    l.bias = name + ".bias";
    params.add_zeros(l.bias, 1, out);
  }
  l.in = in;
  l.out = out;
  l.activation = act;
  return l;
}

Tensor DenseLayer::forward(const Binding& b, const Tensor& h) const {
  if (h.cols() != in)
    throw ShapeError("dense layer " + weight + ": expects width " + std::to_string(in) + ", got " +
                     ad::shape_string(h.value()));
  Tensor y = ad::matmul(h, b[weight]);
  if (!bias.empty()) y = ad::add_bias(y, b[bias]);
  return ad::activate(activation, y);
}

Matrix sample_dropout_mask(Index rows, Index cols, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? scale : 0.0;
  return m;
}

DropoutMasks sample_dropout_masks(const std::vector<GCNLayer>& layers, Index rows, std::mt19937_64& rng) {
  DropoutMasks masks;
  for (const auto& l : layers) {
    if (l.dropout > 0.0) {
      masks.per_layer.emplace_back(sample_dropout_mask(rows, l.in, l.dropout, rng));
    } else {
      masks.per_layer.emplace_back(std::nullopt);
    }
  }
  return masks;
}

Tensor gcn_stack(const std::vector<GCNLayer>& layers, const Binding& b, const GraphOperator& op, const Tensor& h,
                 const DropoutMasks* masks) {
  Tensor x = h;
  for (std::size_t i = 0; i < layers.size(); ++i) x = layers[i].forward(b, op, x, masks ? masks->get(i) : nullptr);
  return x;
}

Tensor dense_stack(const std::vector<DenseLayer>& layers, const Binding& b, const Tensor& h) {
  Tensor x = h;
  for (const auto& l : layers) x = l.forward(b, x);
  return x;
}

}  // namespace gde::fields

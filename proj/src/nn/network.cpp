#include "ulab/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ulab/error.hpp"
#include "ulab/matrix.hpp"

namespace ulab {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(m.row(rows[i]).begin(), m.cols, out.row(i).begin());
  }
  return out;
}

}  // namespace ulab

namespace ulab::nn {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::leaky_relu:
      return "leaky_relu";
    case Activation::tanh:
      return "tanh";
  }
  return "identity";
}

Activation parse_activation(std::string_view text) {
  if (text == "identity") return Activation::identity;
  if (text == "relu") return Activation::relu;
  if (text == "leaky_relu") return Activation::leaky_relu;
  if (text == "tanh") return Activation::tanh;
  throw FormatError("unknown activation '" + std::string(text) + "'");
}

NetworkShape NetworkShape::mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                               std::size_t classes) {
  NetworkShape shape;
  shape.input_dim = input_dim;
  for (std::size_t h : hidden) shape.layers.push_back({h, Activation::relu});
  shape.layers.push_back({classes, Activation::identity});
  return shape;
}

void NetworkShape::validate() const {
  if (input_dim == 0) throw ShapeError("network input_dim must be positive");
  if (layers.empty()) throw ShapeError("network needs at least one layer");
  for (const auto& layer : layers) {
    if (layer.out == 0) throw ShapeError("layer output dimension must be positive");
  }
}

ParameterStore::ParameterStore(const NetworkShape& shape) {
  shape.validate();
  std::size_t offset = 0;
  for (std::size_t l = 0; l < shape.layers.size(); ++l) {
    LayerBlock block{offset, shape.layers[l].out, shape.layer_input(l)};
    blocks_.push_back(block);
    offset = block.end();
  }
  values_.assign(offset, 0.0);
}

std::size_t ParameterStore::layer_of(std::size_t flat) const {
  if (flat >= values_.size()) throw ShapeError("parameter index out of range");
  auto it = std::upper_bound(blocks_.begin(), blocks_.end(), flat,
                             [](std::size_t f, const LayerBlock& b) { return f < b.offset; });
  return static_cast<std::size_t>(it - blocks_.begin()) - 1;
}

ParamLocation ParameterStore::locate(std::size_t flat) const {
  const std::size_t layer = layer_of(flat);
  const LayerBlock& b = blocks_[layer];
  const std::size_t local = flat - b.offset;
  if (local < b.weight_count()) return {layer, local / b.cols, local % b.cols, false};
  return {layer, local - b.weight_count(), 0, true};
}

std::size_t ParameterStore::flat_index(const ParamLocation& loc) const {
  if (loc.layer >= blocks_.size()) throw ShapeError("layer index out of range");
  const LayerBlock& b = blocks_[loc.layer];
  if (loc.row >= b.rows || (!loc.is_bias && loc.col >= b.cols)) {
    throw ShapeError("parameter location out of range");
  }
  return loc.is_bias ? b.bias_offset() + loc.row : b.offset + loc.row * b.cols + loc.col;
}

void ParameterStore::unflatten(std::span<const double> v) {
  if (v.size() != values_.size()) {
    throw ShapeError("unflatten: expected " + std::to_string(values_.size()) + " values, got " +
                     std::to_string(v.size()));
  }
  std::copy(v.begin(), v.end(), values_.begin());
}

std::span<const double> ParameterStore::weights(std::size_t layer) const {
  const LayerBlock& b = blocks_.at(layer);
  return {values_.data() + b.offset, b.weight_count()};
}

std::span<double> ParameterStore::weights(std::size_t layer) {
  const LayerBlock& b = blocks_.at(layer);
  return {values_.data() + b.offset, b.weight_count()};
}

std::span<const double> ParameterStore::bias(std::size_t layer) const {
  const LayerBlock& b = blocks_.at(layer);
  return {values_.data() + b.bias_offset(), b.rows};
}

std::span<double> ParameterStore::bias(std::size_t layer) {
  const LayerBlock& b = blocks_.at(layer);
  return {values_.data() + b.bias_offset(), b.rows};
}

Network::Network(NetworkShape shape) : shape_(std::move(shape)), params_(shape_) {}

bool Network::all_finite() const {
  const auto v = params_.values();
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

namespace {

void draw_layer(ParameterStore& params, std::size_t layer, Rng& rng) {
  const LayerBlock& b = params.blocks()[layer];
  const double bound = std::sqrt(6.0 / static_cast<double>(b.cols + b.rows));
  for (double& w : params.weights(layer)) w = rng.uniform(-bound, bound);
  std::fill(params.bias(layer).begin(), params.bias(layer).end(), 0.0);
}

}  // namespace

Network init_random(const NetworkShape& shape, std::uint64_t seed) {
  Network net(shape);
  Rng rng(seed);
  for (std::size_t l = 0; l < net.depth(); ++l) draw_layer(net.params(), l, rng);
  return net;
}

void reinit_layers(Network& net, std::size_t first_layer, Rng& rng) {
  for (std::size_t l = first_layer; l < net.depth(); ++l) draw_layer(net.params(), l, rng);
}

}  // namespace ulab::nn

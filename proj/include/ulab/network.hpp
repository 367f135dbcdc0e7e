#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ulab/rng.hpp"

namespace ulab::nn {

enum class Activation { identity, relu, leaky_relu, tanh };

inline constexpr double kLeakySlope = 0.01;

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view text);

struct LayerSpec {
  std::size_t out = 0;
  Activation activation = Activation::identity;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkShape {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;

  // ReLU hidden layers followed by an identity output layer of `classes` units.
  static NetworkShape mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                          std::size_t classes);

  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t layer_input(std::size_t layer) const {
    return layer == 0 ? input_dim : layers[layer - 1].out;
  }
  // Throws ShapeError on zero dimensions or an empty layer list.
  void validate() const;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

// Where a flat parameter index lives. For biases `row` is the bias index and
// `col` is unused (0).
struct ParamLocation {
  std::size_t layer = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  bool is_bias = false;

  friend bool operator==(const ParamLocation&, const ParamLocation&) = default;
};

// Layer l's weights occupy [offset, offset + rows*cols) row-major
// (rows = output units, cols = inputs), followed by `rows` biases.
struct LayerBlock {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t weight_count() const { return rows * cols; }
  std::size_t bias_offset() const { return offset + rows * cols; }
  std::size_t end() const { return offset + rows * cols + rows; }

  friend bool operator==(const LayerBlock&, const LayerBlock&) = default;
};

// Flat view of every scalar parameter of a network.
class ParameterStore {
 public:
  ParameterStore() = default;
  explicit ParameterStore(const NetworkShape& shape);

  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  const std::vector<LayerBlock>& blocks() const { return blocks_; }
  std::size_t layer_of(std::size_t flat) const;
  ParamLocation locate(std::size_t flat) const;
  std::size_t flat_index(const ParamLocation& loc) const;

  std::vector<double> flatten() const { return values_; }
  // Throws ShapeError if v.size() != size().
  void unflatten(std::span<const double> v);

  std::span<const double> weights(std::size_t layer) const;
  std::span<double> weights(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

 private:
  std::vector<double> values_;
  std::vector<LayerBlock> blocks_;
};

class Network {
 public:
  Network() = default;
  explicit Network(NetworkShape shape);

  const NetworkShape& shape() const { return shape_; }
  std::size_t input_dim() const { return shape_.input_dim; }
  std::size_t output_dim() const { return shape_.output_dim(); }
  std::size_t class_count() const { return shape_.output_dim(); }
  std::size_t depth() const { return shape_.layers.size(); }
  std::size_t parameter_count() const { return params_.size(); }

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  bool all_finite() const;

  friend bool operator==(const Network&, const Network&) = default;

 private:
  NetworkShape shape_;
  ParameterStore params_;
};

// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
Network init_random(const NetworkShape& shape, std::uint64_t seed);

// Redraws layers [first_layer, depth) the same way init_random does.
void reinit_layers(Network& net, std::size_t first_layer, Rng& rng);

}  // namespace ulab::nn

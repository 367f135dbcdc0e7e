#include <algorithm>
#include <cmath>

#include "ulab/degree.hpp"
#include "ulab/error.hpp"
#include "ulab/propagate.hpp"

namespace ulab::degree {

nn::NetworkShape generator_shape(std::size_t input_dim, const GeneratorArch& arch) {
  if (input_dim == 0 || arch.hidden == 0 || arch.bottleneck == 0) {
    throw ConfigError("generator dimensions must be positive");
  }
  nn::NetworkShape shape;
  shape.input_dim = input_dim;
  shape.layers = {
      {arch.hidden, nn::Activation::leaky_relu},
      {arch.bottleneck, nn::Activation::leaky_relu},
      {arch.hidden, nn::Activation::relu},
      {input_dim, nn::Activation::tanh},
  };
  return shape;
}

namespace {

void check_max_noise(double max_noise) {
  if (!std::isfinite(max_noise) || max_noise < 0.0) throw ConfigError("max_noise must be non-negative");
}

}  // namespace

Generator::Generator(std::size_t input_dim, double max_noise, const GeneratorArch& arch, std::uint64_t seed)
    : net_(nn::init_random(generator_shape(input_dim, arch), seed)), max_noise_(max_noise) {
  check_max_noise(max_noise);
}

Generator::Generator(nn::Network net, double max_noise) : net_(std::move(net)), max_noise_(max_noise) {
  check_max_noise(max_noise);
  if (net_.depth() == 0 || net_.output_dim() != net_.input_dim()) {
    throw ShapeError("generator output dim must equal its input dim");
  }
  if (net_.shape().layers.back().activation != nn::Activation::tanh) {
    throw ShapeError("generator output layer must use tanh");
  }
}

Matrix Generator::noise(const Matrix& batch) const {
  if (batch.cols != input_dim()) throw ShapeError("generator input dim mismatch");
  Matrix out = nn::logits(net_, batch);
  for (double& v : out.data) v = std::clamp(max_noise_ * v, -max_noise_, max_noise_);
  return out;
}

Matrix perturb_data(const Generator& gen, const Matrix& batch, data::Scaling scaling) {
  Matrix out = gen.noise(batch);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double x = batch.data[i];
    double v = x + out.data[i];
    // x + n can round past the bound by an ulp.
    while (std::abs(v - x) > gen.max_noise()) v = std::nextafter(v, x);
    if (scaling == data::Scaling::unit_range) v = std::clamp(v, 0.0, 1.0);
    out.data[i] = v;
  }
  return out;
}

}  // namespace ulab::degree

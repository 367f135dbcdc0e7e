#include "ulab/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ulab/error.hpp"
#include "ulab/simd.hpp"

namespace ulab::nn {
namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::identity:
      return z;
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::leaky_relu:
      return z > 0.0 ? z : kLeakySlope * z;
    case Activation::tanh:
      return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the activation's output.
double activation_slope(Activation a, double y) {
  switch (a) {
    case Activation::identity:
      return 1.0;
    case Activation::relu:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu:
      return y > 0.0 ? 1.0 : kLeakySlope;
    case Activation::tanh:
      return 1.0 - y * y;
  }
  return 1.0;
}

Matrix dense_layer(const ParameterStore& params, std::size_t layer, Activation act, const Matrix& in) {
  const LayerBlock& b = params.blocks()[layer];
  const auto w = params.weights(layer);
  const auto bias = params.bias(layer);
  const auto& kernels = simd::active();
  Matrix out(in.rows, b.rows);
  for (std::size_t s = 0; s < in.rows; ++s) {
    const double* x = in.data.data() + s * in.cols;
    double* y = out.data.data() + s * b.rows;
    for (std::size_t o = 0; o < b.rows; ++o) {
      y[o] = activate(act, kernels.dot(w.data() + o * b.cols, x, b.cols) + bias[o]);
    }
  }
  return out;
}

void check_batch(const Network& net, const Matrix& batch) {
  if (batch.rows == 0) throw ShapeError("batch has no rows");
  if (batch.cols != net.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols) + " columns, network expects " +
                     std::to_string(net.input_dim()));
  }
}

}  // namespace

ForwardTrace forward_trace(const Network& net, const Matrix& batch) {
  check_batch(net, batch);
  ForwardTrace trace;
  trace.input = &batch;
  trace.outputs.reserve(net.depth());
  const auto& layers = net.shape().layers;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Matrix& in = l == 0 ? batch : trace.outputs.back();
    trace.outputs.push_back(dense_layer(net.params(), l, layers[l].activation, in));
  }
  return trace;
}

Matrix logits(const Network& net, const Matrix& batch) {
  check_batch(net, batch);
  const auto& layers = net.shape().layers;
  Matrix current = dense_layer(net.params(), 0, layers[0].activation, batch);
  for (std::size_t l = 1; l < layers.size(); ++l) {
    current = dense_layer(net.params(), l, layers[l].activation, current);
  }
  return current;
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : row) v /= total;
  }
}

Matrix forward(const Network& net, const Matrix& batch) {
  Matrix out = logits(net, batch);
  for (double v : out.data) {
    if (!std::isfinite(v)) throw NumericError("non-finite activation in forward pass");
  }
  softmax_rows(out);
  return out;
}

void check_labels(std::span<const int> labels, std::size_t classes) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DomainError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

double cross_entropy(const Matrix& probs, std::span<const int> labels) {
  if (labels.size() != probs.rows) throw ShapeError("label count does not match batch rows");
  if (probs.rows == 0) throw ShapeError("cross_entropy of an empty batch");
  check_labels(labels, probs.cols);
  double total = 0.0;
  for (std::size_t s = 0; s < probs.rows; ++s) {
    total -= std::log(std::max(probs(s, static_cast<std::size_t>(labels[s])), kProbabilityFloor));
  }
  return total / static_cast<double>(probs.rows);
}

Matrix cross_entropy_logit_grad(const Matrix& probs, std::span<const int> labels) {
  if (labels.size() != probs.rows) throw ShapeError("label count does not match batch rows");
  check_labels(labels, probs.cols);
  Matrix grad = probs;
  const double scale = 1.0 / static_cast<double>(probs.rows);
  for (std::size_t s = 0; s < probs.rows; ++s) {
    grad(s, static_cast<std::size_t>(labels[s])) -= 1.0;
    for (double& g : grad.row(s)) g *= scale;
  }
  return grad;
}

void backpropagate(const Network& net, const ForwardTrace& trace, Matrix output_grad,
                   const ParameterMask* mask, std::span<double> grads, Matrix* input_grad) {
  const ParameterStore& params = net.params();
  if (grads.size() != params.size()) throw ShapeError("gradient buffer length mismatch");
  if (mask != nullptr && mask->size() != params.size()) throw ShapeError("mask length mismatch");
  const std::size_t depth = net.depth();
  if (trace.outputs.size() != depth || trace.input == nullptr) throw ShapeError("incomplete forward trace");
  const std::size_t batch = trace.input->rows;
  if (output_grad.rows != batch || output_grad.cols != net.output_dim()) {
    throw ShapeError("output gradient shape mismatch");
  }
  const auto& kernels = simd::active();
  const std::size_t lowest = mask == nullptr ? 0 : mask->lowest_layer();

  Matrix delta = std::move(output_grad);
  for (std::size_t l = depth; l-- > 0;) {
    const Activation act = net.shape().layers[l].activation;
    const Matrix& post = trace.outputs[l];
    if (act != Activation::identity) {
      for (std::size_t i = 0; i < delta.data.size(); ++i) delta.data[i] *= activation_slope(act, post.data[i]);
    }
    const Matrix& prev = l == 0 ? *trace.input : trace.outputs[l - 1];
    const LayerBlock& b = params.blocks()[l];

    if (mask == nullptr || mask->layer_full(l)) {
      double* gw = grads.data() + b.offset;
      double* gb = grads.data() + b.bias_offset();
      for (std::size_t s = 0; s < batch; ++s) {
        const double* x = prev.data.data() + s * b.cols;
        for (std::size_t o = 0; o < b.rows; ++o) {
          const double d = delta(s, o);
          if (d == 0.0) continue;
          kernels.axpy(d, x, gw + o * b.cols, b.cols);
          gb[o] += d;
        }
      }
    } else {
      for (std::size_t idx : mask->layer_indices(l)) {
        const std::size_t local = idx - b.offset;
        double acc = 0.0;
        if (local < b.weight_count()) {
          const std::size_t r = local / b.cols;
          const std::size_t c = local % b.cols;
          for (std::size_t s = 0; s < batch; ++s) acc += delta(s, r) * prev(s, c);
        } else {
          const std::size_t r = local - b.weight_count();
          for (std::size_t s = 0; s < batch; ++s) acc += delta(s, r);
        }
        grads[idx] += acc;
      }
    }

    const bool need_lower = input_grad != nullptr || (l > 0 && lowest < l);
    if (!need_lower) break;
    const auto w = params.weights(l);
    Matrix next(batch, b.cols);
    for (std::size_t s = 0; s < batch; ++s) {
      double* dst = next.data.data() + s * b.cols;
      for (std::size_t o = 0; o < b.rows; ++o) {
        const double d = delta(s, o);
        if (d == 0.0) continue;
        kernels.axpy(d, w.data() + o * b.cols, dst, b.cols);
      }
    }
    if (l == 0) {
      *input_grad = std::move(next);
    } else {
      delta = std::move(next);
    }
  }
}

GradientRecord backward(const Network& net, const Matrix& batch, std::span<const int> labels,
                        const ParameterMask* mask) {
  if (labels.size() != batch.rows) throw ShapeError("label count does not match batch rows");
  check_labels(labels, net.class_count());
  GradientRecord record;
  record.source = batch.rows == 1 ? GradientSource::single_sample : GradientSource::batch_mean;
  record.grads.assign(net.parameter_count(), 0.0);
  if (mask != nullptr && mask->count() == 0) {
    if (mask->size() != net.parameter_count()) throw ShapeError("mask length mismatch");
    return record;
  }
  const ForwardTrace trace = forward_trace(net, batch);
  Matrix probs = trace.outputs.back();
  softmax_rows(probs);
  backpropagate(net, trace, cross_entropy_logit_grad(probs, labels), mask, record.grads);
  for (double g : record.grads) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient");
  }
  return record;
}

}  // namespace ulab::nn

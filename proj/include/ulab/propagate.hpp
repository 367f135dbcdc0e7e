#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ulab/mask.hpp"
#include "ulab/matrix.hpp"
#include "ulab/network.hpp"

namespace ulab::nn {

// Probabilities are floored at this value before any logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

enum class GradientSource { single_sample, batch_mean };

struct GradientRecord {
  std::vector<double> grads;
  GradientSource source = GradientSource::batch_mean;
};

// Post-activation outputs of every layer for one batch; `outputs.back()` are
// the logits of a classifier. Keeps a pointer to the input batch, which must
// outlive the trace.
struct ForwardTrace {
  const Matrix* input = nullptr;
  std::vector<Matrix> outputs;
};

ForwardTrace forward_trace(const Network& net, const Matrix& batch);
// Raw output of the last layer.
Matrix logits(const Network& net, const Matrix& batch);
// Class-probability rows (softmax of the logits). Throws ShapeError on a
// column mismatch or empty batch, NumericError on non-finite activations.
Matrix forward(const Network& net, const Matrix& batch);

// In-place, max-subtracted.
void softmax_rows(Matrix& m);

// Mean cross-entropy of probability rows against class labels.
double cross_entropy(const Matrix& probs, std::span<const int> labels);
// d(mean CE)/d(logits) = (p - onehot(y)) / B.
Matrix cross_entropy_logit_grad(const Matrix& probs, std::span<const int> labels);

// Throws DomainError if any label is outside [0, classes).
void check_labels(std::span<const int> labels, std::size_t classes);

// Back-propagates `output_grad` (dL/d last-layer output, already scaled for
// the batch mean) through the trace. Parameter gradients are ADDED into
// `grads` (length N) for entries inside `mask` (all entries when null);
// entries outside the mask are left untouched. When `input_grad` is non-null
// it receives dL/d input.
void backpropagate(const Network& net, const ForwardTrace& trace, Matrix output_grad,
                   const ParameterMask* mask, std::span<double> grads, Matrix* input_grad = nullptr);

// Gradient of the mean cross-entropy over the batch. Masked entries are 0.
GradientRecord backward(const Network& net, const Matrix& batch, std::span<const int> labels,
                        const ParameterMask* mask = nullptr);

}  // namespace ulab::nn

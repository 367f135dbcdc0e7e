#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "ulab/mask.hpp"
#include "ulab/network.hpp"
#include "ulab/propagate.hpp"

namespace ulab::nn {

enum class OptimizerKind { sgd, adam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

// sgd:  p <- p - lr * g
// adam: bias-corrected first/second moments, p <- p - lr * m_hat / (sqrt(v_hat) + eps)
class Optimizer {
 public:
  Optimizer(OptimizerSpec spec, std::size_t parameter_count);

  // With a mask only the masked-in entries are visited; everything else is
  // left bit-identical, moments included. Throws ShapeError on length
  // mismatch, NumericError if an update produces a non-finite value (the
  // store is left unchanged in that case).
  void step(ParameterStore& params, const GradientRecord& grads, const ParameterMask* mask = nullptr);

  const OptimizerSpec& spec() const { return spec_; }
  std::size_t step_count() const { return steps_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

 private:
  template <typename Visit>
  void for_each_index(std::size_t n, const ParameterMask* mask, Visit&& visit) const;

  OptimizerSpec spec_;
  std::size_t steps_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace ulab::nn

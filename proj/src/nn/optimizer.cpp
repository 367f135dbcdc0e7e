#include "ulab/optimizer.hpp"

#include <cmath>
#include <string>

#include "ulab/error.hpp"

namespace ulab::nn {

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sgd") return OptimizerKind::sgd;
  if (text == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(text) + "'");
}

Optimizer::Optimizer(OptimizerSpec spec, std::size_t parameter_count) : spec_(spec) {
  if (!(spec_.learning_rate >= 0.0)) throw DomainError("learning rate must be non-negative");
  if (spec_.kind == OptimizerKind::adam) {
    m_.assign(parameter_count, 0.0);
    v_.assign(parameter_count, 0.0);
  }
}

template <typename Visit>
void Optimizer::for_each_index(std::size_t n, const ParameterMask* mask, Visit&& visit) const {
  if (mask == nullptr) {
    for (std::size_t i = 0; i < n; ++i) visit(i);
  } else {
    for (std::size_t i : mask->indices()) visit(i);
  }
}

void Optimizer::step(ParameterStore& params, const GradientRecord& grads, const ParameterMask* mask) {
  const std::size_t n = params.size();
  if (grads.grads.size() != n) throw ShapeError("optimizer: gradient length mismatch");
  if (mask != nullptr && mask->size() != n) throw ShapeError("optimizer: mask length mismatch");
  if (spec_.kind == OptimizerKind::adam && m_.size() != n) throw ShapeError("optimizer: moment length mismatch");

  const double lr = spec_.learning_rate;
  // Validate first so a failed step leaves params and moments untouched.
  std::vector<double> updated;
  updated.reserve(mask == nullptr ? n : mask->count());
  std::size_t bad = n;

  if (spec_.kind == OptimizerKind::sgd) {
    for_each_index(n, mask, [&](std::size_t i) {
      const double p = params[i] - lr * grads.grads[i];
      if (!std::isfinite(p) && bad == n) bad = i;
      updated.push_back(p);
    });
    if (bad != n) throw NumericError("non-finite sgd update at parameter " + std::to_string(bad));
    std::size_t k = 0;
    for_each_index(n, mask, [&](std::size_t i) { params[i] = updated[k++]; });
    ++steps_;
    return;
  }

  const double t = static_cast<double>(steps_ + 1);
  const double c1 = 1.0 - std::pow(spec_.beta1, t);
  const double c2 = 1.0 - std::pow(spec_.beta2, t);
  std::vector<double> new_m;
  std::vector<double> new_v;
  new_m.reserve(updated.capacity());
  new_v.reserve(updated.capacity());
  for_each_index(n, mask, [&](std::size_t i) {
    const double g = grads.grads[i];
    const double m = spec_.beta1 * m_[i] + (1.0 - spec_.beta1) * g;
    const double v = spec_.beta2 * v_[i] + (1.0 - spec_.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    const double p = params[i] - lr * m_hat / (std::sqrt(v_hat) + spec_.epsilon);
    if (!std::isfinite(p) && bad == n) bad = i;
    new_m.push_back(m);
    new_v.push_back(v);
    updated.push_back(p);
  });
  if (bad != n) throw NumericError("non-finite adam update at parameter " + std::to_string(bad));
  std::size_t k = 0;
  for_each_index(n, mask, [&](std::size_t i) {
    m_[i] = new_m[k];
    v_[i] = new_v[k];
    params[i] = updated[k];
    ++k;
  });
  ++steps_;
}

}  // namespace ulab::nn

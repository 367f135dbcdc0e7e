#include <algorithm>
#include <cmath>
#include <vector>

#include "ulab/error.hpp"
#include "ulab/propagate.hpp"
#include "ulab/unlearn.hpp"

namespace ulab::unlearn {

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("js_divergence: distributions differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) total += p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) total += q[i] * std::log2(q[i] / m);
  }
  return std::clamp(0.5 * total, 0.0, 1.0);
}

void add_js_logit_grad(std::span<const double> p, std::span<const double> q, double scale,
                       std::span<double> out) {
  if (p.size() != q.size() || out.size() != p.size()) throw ShapeError("add_js_logit_grad: length mismatch");
  // dJS/dp_i = 0.5 * log2(p_i / m_i); chained through the softmax Jacobian.
  std::vector<double> gp(p.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = std::max(p[i], nn::kProbabilityFloor);
    const double qi = std::max(q[i], nn::kProbabilityFloor);
    gp[i] = 0.5 * std::log2(2.0 * pi / (pi + qi));
    mean += p[i] * gp[i];
  }
  for (std::size_t i = 0; i < p.size(); ++i) out[i] += scale * p[i] * (gp[i] - mean);
}

double mean_js(const Matrix& p, const Matrix& q) {
  if (p.rows != q.rows || p.cols != q.cols) throw ShapeError("mean_js: shape mismatch");
  if (p.rows == 0) throw ShapeError("mean_js: no rows");
  double total = 0.0;
  for (std::size_t r = 0; r < p.rows; ++r) total += js_divergence(p.row(r), q.row(r));
  return total / static_cast<double>(p.rows);
}

}  // namespace ulab::unlearn

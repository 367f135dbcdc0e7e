#pragma once

// Reference computations for the tests. Nothing here calls into the library's
// numeric paths; only the documented parameter layout (per layer: weights
// out x in row-major, then biases) is shared.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracle {

enum class Act { identity, relu, leaky, tanh };

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  Act act = Act::identity;
};

inline double apply(Act a, double z) {
  switch (a) {
    case Act::identity: return z;
    case Act::relu: return z > 0.0 ? z : 0.0;
    case Act::leaky: return z > 0.0 ? z : 0.01 * z;
    case Act::tanh: return std::tanh(z);
  }
  return z;
}

// Plain triple loop over one input row.
inline std::vector<double> forward(const std::vector<Layer>& layers, const std::vector<double>& w,
                                   std::vector<double> x) {
  std::size_t off = 0;
  for (const Layer& l : layers) {
    std::vector<double> y(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double z = w[off + l.out * l.in + o];
      for (std::size_t i = 0; i < l.in; ++i) z += w[off + o * l.in + i] * x[i];
      y[o] = apply(l.act, z);
    }
    off += l.out * l.in + l.out;
    x = std::move(y);
  }
  return x;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - mx));
  for (double& v : p) v /= s;
  return p;
}

// Mean cross-entropy over rows via log-sum-exp.
inline double loss(const std::vector<Layer>& layers, const std::vector<double>& w,
                   const std::vector<std::vector<double>>& xs, const std::vector<int>& ys) {
  double total = 0.0;
  for (std::size_t r = 0; r < xs.size(); ++r) {
    const std::vector<double> z = forward(layers, w, xs[r]);
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    total += mx + std::log(s) - z[ys[r]];
  }
  return total / static_cast<double>(xs.size());
}

template <typename F>
std::vector<double> central_difference(F&& f, std::vector<double> w, double h) {
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double keep = w[i];
    w[i] = keep + h;
    const double up = f(w);
    w[i] = keep - h;
    const double down = f(w);
    w[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Jensen-Shannon divergence in bits straight from the KL definition.
inline double js(const std::vector<double>& p, const std::vector<double>& q) {
  auto kl = [](const std::vector<double>& a, const std::vector<double>& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > 0.0) s += a[i] * (std::log(a[i]) - std::log(m[i])) / std::log(2.0);
    }
    return s;
  };
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = (p[i] + q[i]) / 2.0;
  return 0.5 * kl(p, m) + 0.5 * kl(q, m);
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Pearson correlation of average ranks.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Inner-loop kernels for the dense-network engine. Every kernel has a scalar
// reference implementation; vector variants are picked at runtime from what
// the CPU supports and are tested for equivalence against the reference.
//
// The backend can be pinned with ULAB_SIMD=scalar|avx2|neon|auto or select().

namespace ulab::simd {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the backend was not compiled in or the CPU lacks it.
const KernelTable* kernels_for(Backend backend);

bool supported(Backend backend);
Backend best_available();
const KernelTable& active();
// Throws DomainError if the backend is not supported on this machine.
void select(Backend backend);
std::string_view name(Backend backend);
Backend parse_backend(std::string_view text);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

inline double sum_squares(std::span<const double> x) {
  return active().sum_squares(x.data(), x.size());
}

}  // namespace ulab::simd

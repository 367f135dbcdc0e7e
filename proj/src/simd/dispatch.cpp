#include <atomic>
#include <cstdlib>
#include <string>

#include "tables.hpp"
#include "ulab/error.hpp"

namespace ulab::simd {
namespace {

bool cpu_has_avx2() {
#if defined(ULAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  Backend backend = best_available();
  if (const char* env = std::getenv("ULAB_SIMD"); env != nullptr && *env != '\0') {
    const std::string_view text(env);
    // Unknown or unsupported values fall back to the best available backend.
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
      if (text == name(b) && supported(b)) backend = b;
    }
  }
  return kernels_for(backend);
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar_kernels() { return detail::kScalarTable; }

const KernelTable* kernels_for(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return &detail::kScalarTable;
    case Backend::avx2:
#if defined(ULAB_HAVE_AVX2)
      if (cpu_has_avx2()) return &detail::kAvx2Table;
#endif
      return nullptr;
    case Backend::neon:
#if defined(ULAB_HAVE_NEON)
      return &detail::kNeonTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

bool supported(Backend backend) { return kernels_for(backend) != nullptr; }

Backend best_available() {
  if (supported(Backend::avx2)) return Backend::avx2;
  if (supported(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Backend backend) {
  const KernelTable* table = kernels_for(backend);
  if (table == nullptr) {
    throw DomainError("SIMD backend '" + std::string(name(backend)) + "' is not available");
  }
  current().store(table, std::memory_order_release);
}

std::string_view name(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

Backend parse_backend(std::string_view text) {
  if (text == "scalar") return Backend::scalar;
  if (text == "avx2") return Backend::avx2;
  if (text == "neon") return Backend::neon;
  throw DomainError("unknown SIMD backend '" + std::string(text) + "'");
}

}  // namespace ulab::simd

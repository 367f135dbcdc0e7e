#include <cmath>
#include <vector>

#include "doctest.h"
#include "ulab/error.hpp"
#include "ulab/rng.hpp"
#include "ulab/simd.hpp"

using namespace ulab;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-3.0, 3.0);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match hand-computed values") {
  const auto& k = simd::scalar_kernels();
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {4.0, -5.0, 6.0};
  CHECK(k.dot(a, b, 3) == 12.0);
  CHECK(k.sum_squares(a, 3) == 14.0);
  double y[] = {1.0, 1.0, 1.0};
  k.axpy(2.0, a, y, 3);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 5.0);
  CHECK(y[2] == 7.0);
  CHECK(k.dot(a, b, 0) == 0.0);
}

TEST_CASE("every supported backend agrees with the scalar reference") {
  Rng rng(17);
  for (auto backend : {simd::Backend::avx2, simd::Backend::neon}) {
    if (!simd::supported(backend)) continue;
    const simd::KernelTable* k = simd::kernels_for(backend);
    REQUIRE(k != nullptr);
    CAPTURE(simd::name(backend));
    const auto& ref = simd::scalar_kernels();
    // Lengths around the vector width and its tails.
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 100, 1023}) {
      const auto a = random_vector(rng, n);
      const auto b = random_vector(rng, n);
      const double tol = 1e-12 * (1.0 + static_cast<double>(n));
      CHECK(std::abs(k->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= tol * 9.0);
      CHECK(std::abs(k->sum_squares(a.data(), n) - ref.sum_squares(a.data(), n)) <= tol * 9.0);
      std::vector<double> y1 = b;
      std::vector<double> y2 = b;
      k->axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-14);
    }
  }
}

TEST_CASE("backend selection") {
  const simd::Backend before = simd::active().backend;
  CHECK(simd::supported(simd::Backend::scalar));
  CHECK(simd::supported(simd::best_available()));
  simd::select(simd::Backend::scalar);
  CHECK(simd::active().backend == simd::Backend::scalar);
  CHECK(simd::parse_backend("scalar") == simd::Backend::scalar);
  CHECK(simd::parse_backend("avx2") == simd::Backend::avx2);
  CHECK_THROWS_AS(simd::parse_backend("sse9"), DomainError);
  simd::select(before);
  CHECK(simd::active().backend == before);
}

#pragma once

#include "ulab/simd.hpp"

namespace ulab::simd::detail {

extern const KernelTable kScalarTable;
#if defined(ULAB_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(ULAB_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

}  // namespace ulab::simd::detail

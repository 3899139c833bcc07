#pragma once

#include "mblab/simd/kernels.hpp"

namespace mblab::simd {

// Defined in kernels_avx2.cpp when MBLAB_HAVE_AVX2 is set.
const Kernels& avx2_kernels_unchecked();

}  // namespace mblab::simd

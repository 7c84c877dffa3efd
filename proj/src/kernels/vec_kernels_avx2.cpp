// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma;
// callers must gate on avx2_available() (the dispatcher does).

#if defined(__x86_64__) || defined(_M_X64)

#include "depsteer/kernels/vec_kernels.hpp"

#include <immintrin.h>

namespace depsteer::kernels {

namespace {

inline double hsum256(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot_avx2(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i),
                               _mm256_loadu_pd(b.data() + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4),
                               _mm256_loadu_pd(b.data() + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i),
                               _mm256_loadu_pd(b.data() + i), acc0);
    }
    double acc = hsum256(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double squared_norm_avx2(std::span<const double> a) {
    const std::size_t n = a.size();
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(a.data() + i);
        acc0 = _mm256_fmadd_pd(v, v, acc0);
    }
    double acc = hsum256(acc0);
    for (; i < n; ++i) {
        acc += a[i] * a[i];
    }
    return acc;
}

double weighted_sqdist_avx2(std::span<const double> a,
                            std::span<const double> b,
                            std::span<const double> w) {
    const std::size_t n = a.size();
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i),
                                  _mm256_loadu_pd(b.data() + i));
        __m256d wd = _mm256_mul_pd(_mm256_loadu_pd(w.data() + i), d);
        acc0 = _mm256_fmadd_pd(wd, d, acc0);
    }
    double acc = hsum256(acc0);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += w[i] * d * d;
    }
    return acc;
}

}  // namespace depsteer::kernels

#endif  // x86-64

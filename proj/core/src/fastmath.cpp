// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/fastmath.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define VDC_FASTMATH_AVX2 1
#endif

namespace vdc::fastmath {
namespace {

constexpr double kExpClamp = 700.0;
constexpr double kInvLn2 = 1.44269504088896338700e+00;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

// exp(r) on [-ln2/2, ln2/2], truncated Taylor series, ~1e-15 relative.
constexpr double kExpC[12] = {
    1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0, 1.0 / 40320.0,
    1.0 / 5040.0,     1.0 / 720.0,     1.0 / 120.0,    1.0 / 24.0,
    1.0 / 6.0,        0.5,             1.0,            1.0};

// log1p(u) for u in [0, 1] via 2*atanh(v), v = u/(2+u) in [0, 1/3].
// Odd series in v: coefficients 1/(2k+1) applied to w = v^2.
constexpr double kAtanhC[15] = {
    1.0 / 29.0, 1.0 / 27.0, 1.0 / 25.0, 1.0 / 23.0, 1.0 / 21.0,
    1.0 / 19.0, 1.0 / 17.0, 1.0 / 15.0, 1.0 / 13.0, 1.0 / 11.0,
    1.0 / 9.0,  1.0 / 7.0,  1.0 / 5.0,  1.0 / 3.0,  1.0};

inline double scalar_exp(double x) {
  x = x > kExpClamp ? kExpClamp : (x < -kExpClamp ? -kExpClamp : x);
  double kd = std::nearbyint(x * kInvLn2);
  double r = x - kd * kLn2Hi;
  r -= kd * kLn2Lo;
  double p = kExpC[0];
  for (int i = 1; i < 12; ++i) p = p * r + kExpC[i];
  int64_t k = int64_t(kd);
  uint64_t bits = uint64_t(k + 1023) << 52;
  double s;
  std::memcpy(&s, &bits, 8);
  return p * s;
}

inline double scalar_log1p01(double u) {
  double v = u / (2.0 + u);
  double w = v * v;
  double p = kAtanhC[0];
  for (int i = 1; i < 15; ++i) p = p * w + kAtanhC[i];
  return 2.0 * v * p;
}

#ifdef VDC_FASTMATH_AVX2

inline __m256d exp4(__m256d x) {
  x = _mm256_min_pd(_mm256_set1_pd(kExpClamp),
                    _mm256_max_pd(_mm256_set1_pd(-kExpClamp), x));
  __m256d kd = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kInvLn2)),
                               _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(kd, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(kd, _mm256_set1_pd(kLn2Lo), r);
  __m256d p = _mm256_set1_pd(kExpC[0]);
  for (int i = 1; i < 12; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kExpC[i]));
  __m128i k32 = _mm256_cvtpd_epi32(kd);
  __m256i k64 = _mm256_cvtepi32_epi64(k32);
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

inline __m256d log1p01_4(__m256d u) {
  __m256d v = _mm256_div_pd(u, _mm256_add_pd(_mm256_set1_pd(2.0), u));
  __m256d w = _mm256_mul_pd(v, v);
  __m256d p = _mm256_set1_pd(kAtanhC[0]);
  for (int i = 1; i < 15; ++i) p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(kAtanhC[i]));
  return _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), v), p);
}

#endif  // VDC_FASTMATH_AVX2

}  // namespace

void exp_batch(const double* x, double* y, size_t n) {
  size_t i = 0;
#ifdef VDC_FASTMATH_AVX2
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
#endif
  for (; i < n; ++i) y[i] = scalar_exp(x[i]);
}

void sigmoid_batch(const double* x, double* y, size_t n) {
  size_t i = 0;
#ifdef VDC_FASTMATH_AVX2
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d e = exp4(_mm256_sub_pd(zero, _mm256_andnot_pd(sign_mask, v)));
    __m256d nonneg = _mm256_cmp_pd(v, zero, _CMP_GE_OQ);
    // sigmoid = (x >= 0 ? 1 : e) / (1 + e); keeps tiny results exact.
    __m256d num = _mm256_blendv_pd(e, one, nonneg);
    _mm256_storeu_pd(y + i, _mm256_div_pd(num, _mm256_add_pd(one, e)));
  }
#endif
  for (; i < n; ++i) {
    double v = x[i];
    double e = scalar_exp(-std::abs(v));
    y[i] = (v >= 0.0 ? 1.0 : e) / (1.0 + e);
  }
}

void softplus_batch(const double* x, double* y, double* dydx, size_t n) {
  size_t i = 0;
#ifdef VDC_FASTMATH_AVX2
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d e = exp4(_mm256_sub_pd(zero, _mm256_andnot_pd(sign_mask, v)));
    // softplus(x) = max(x, 0) + log1p(exp(-|x|))
    __m256d sp = _mm256_add_pd(_mm256_max_pd(v, zero), log1p01_4(e));
    _mm256_storeu_pd(y + i, sp);
    if (dydx) {
      __m256d nonneg = _mm256_cmp_pd(v, zero, _CMP_GE_OQ);
      __m256d num = _mm256_blendv_pd(e, one, nonneg);
      _mm256_storeu_pd(dydx + i, _mm256_div_pd(num, _mm256_add_pd(one, e)));
    }
  }
#endif
  for (; i < n; ++i) {
    double v = x[i];
    double e = scalar_exp(-std::abs(v));
    y[i] = (v > 0.0 ? v : 0.0) + scalar_log1p01(e);
    if (dydx) dydx[i] = (v >= 0.0 ? 1.0 : e) / (1.0 + e);
  }
}

}  // namespace vdc::fastmath

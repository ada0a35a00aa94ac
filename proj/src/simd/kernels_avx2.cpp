// Copyright 2026 The oodbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// AVX2 + FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; keep it free of inline library templates so no AVX-encoded
// comdat copy can leak into code paths run on older CPUs.

#include <cmath>
#include <cstdint>

#include <immintrin.h>

#include "oodbench/simd/kernels.hpp"

namespace oodbench::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, swapped));
}

// exp(x) = 2^n * exp(r), |r| <= ln2/2, with the Cephes rational
// approximation exp(r) = 1 + 2r P(r^2) / (Q(r^2) - r P(r^2)). Arguments below
// ln(DBL_MIN) flush to zero instead of producing subnormals.
inline __m256d exp_pd(__m256d x) {
  const __m256d lo_limit = _mm256_set1_pd(-708.3964185322641);
  const __m256d hi_limit = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo_limit), hi_limit);

  const __m256d fx = _mm256_round_pd(
      _mm256_fmadd_pd(x, _mm256_set1_pd(1.4426950408889634073599), _mm256_set1_pd(0.5)),
      _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125E-1), x);
  r = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212E-6), r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(1.26177193074810590878E-4), rr,
                              _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(3.00198505138664455042E-6), rr,
                              _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  __m256i n = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(fx));
  n = _mm256_slli_epi64(_mm256_add_epi64(n, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(e, _mm256_castsi256_pd(n));
  return _mm256_andnot_pd(underflow, result);
}

// ln(x) for normal positive x, Cephes log(1+f) rational form after frexp.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i exp_field = _mm256_srli_epi64(bits, 52);
  // int64 -> double for small non-negative ints via the 2^52 magic constant
  const __m256d magic = _mm256_set1_pd(4503599627370496.0);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(exp_field, _mm256_castpd_si256(magic))), magic);
  e = _mm256_sub_pd(e, _mm256_set1_pd(1022.0));

  const __m256i mant_bits =
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                      _mm256_set1_epi64x(0x3FE0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant_bits);  // [0.5, 1)

  const __m256d small = _mm256_cmp_pd(m, _mm256_set1_pd(0.70710678118654752440), _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(small, _mm256_set1_pd(1.0)));
  m = _mm256_sub_pd(_mm256_add_pd(m, _mm256_and_pd(small, m)), _mm256_set1_pd(1.0));

  const __m256d z = _mm256_mul_pd(m, m);
  __m256d num = _mm256_set1_pd(1.01875663804580931796E-4);
  num = _mm256_fmadd_pd(num, m, _mm256_set1_pd(4.97494994976747001425E-1));
  num = _mm256_fmadd_pd(num, m, _mm256_set1_pd(4.70579119878881725854E0));
  num = _mm256_fmadd_pd(num, m, _mm256_set1_pd(1.44989225341610930846E1));
  num = _mm256_fmadd_pd(num, m, _mm256_set1_pd(1.79368678507819816313E1));
  num = _mm256_fmadd_pd(num, m, _mm256_set1_pd(7.70838733755885391666E0));
  __m256d den = _mm256_add_pd(m, _mm256_set1_pd(1.12873587189167450590E1));
  den = _mm256_fmadd_pd(den, m, _mm256_set1_pd(4.52279145837532221105E1));
  den = _mm256_fmadd_pd(den, m, _mm256_set1_pd(8.29875266912776603211E1));
  den = _mm256_fmadd_pd(den, m, _mm256_set1_pd(7.11544750618563894466E1));
  den = _mm256_fmadd_pd(den, m, _mm256_set1_pd(2.31251620126765340583E1));

  __m256d y = _mm256_mul_pd(m, _mm256_div_pd(_mm256_mul_pd(z, num), den));
  y = _mm256_fmadd_pd(e, _mm256_set1_pd(-2.121944400546905827679e-4), y);
  y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, y);
  __m256d out = _mm256_add_pd(m, y);
  out = _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), out);
  return out;
}

double max_avx2(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    m = hmax(acc);
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double exp_shifted_avx2(const double* x, std::size_t n, double shift, double scale,
                        double* out) {
  const __m256d vshift = _mm256_set1_pd(shift);
  const __m256d vscale = _mm256_set1_pd(scale);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d arg = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vshift), vscale);
    const __m256d e = exp_pd(arg);
    _mm256_storeu_pd(out + i, e);
    acc = _mm256_add_pd(acc, e);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) {
    out[i] = std::exp((x[i] - shift) * scale);
    sum += out[i];
  }
  return sum;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

double xlogx_sum_avx2(const double* p, std::size_t n) {
  const __m256d tiny = _mm256_set1_pd(2.2250738585072014e-308);  // DBL_MIN
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(p + i);
    // zero and subnormal lanes contribute (at most ~1e-305) as zero
    const __m256d valid = _mm256_cmp_pd(v, tiny, _CMP_GE_OQ);
    const __m256d safe = _mm256_blendv_pd(one, v, valid);
    const __m256d term = _mm256_mul_pd(safe, log_pd(safe));
    acc = _mm256_add_pd(acc, _mm256_and_pd(valid, term));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i]);
  }
  return s;
}

constexpr KernelTable kAvx2Table = {
    Isa::kAvx2,      max_avx2,       exp_shifted_avx2, dot_avx2,
    squared_distance_avx2, axpy_avx2, scale_avx2,      xlogx_sum_avx2,
};

}  // namespace

const KernelTable* avx2_kernels_unchecked() { return &kAvx2Table; }

}  // namespace oodbench::simd

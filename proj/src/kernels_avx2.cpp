#include "ncc/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define NCC_X86 1
#include <immintrin.h>
#else
#define NCC_X86 0
#endif

// AVX2 kernels. Multiplies and adds are kept as separate instructions (no
// FMA contraction) so elementwise results match the scalar reference
// bit-for-bit; only the reductions reassociate.

namespace ncc::kernels {

#if NCC_X86
namespace {

__attribute__((target("avx2"))) void axpy_avx2(double a, const double* x,
                                               double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2"))) void saxpby_avx2(double a, const double* x,
                                                 double b, const double* y,
                                                 double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    __m256d vy = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(vx, vy));
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

__attribute__((target("avx2"))) void add_scaled_diff_avx2(double a,
                                                          const double* p,
                                                          const double* q,
                                                          double* acc,
                                                          std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_loadu_pd(q + i));
    __m256d vacc = _mm256_loadu_pd(acc + i);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(vacc, _mm256_mul_pd(va, d)));
  }
  for (; i < n; ++i) acc[i] += a * (p[i] - q[i]);
}

__attribute__((target("avx2"))) void scale_avx2(double a, double* x,
                                                std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

__attribute__((target("avx2"))) void clamp_avx2(const double* x,
                                                const double* lo,
                                                const double* hi, double* out,
                                                std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    v = _mm256_max_pd(v, _mm256_loadu_pd(lo + i));
    v = _mm256_min_pd(v, _mm256_loadu_pd(hi + i));
    _mm256_storeu_pd(out + i, v);
  }
  for (; i < n; ++i) {
    double v = x[i];
    if (v < lo[i]) v = lo[i];
    if (v > hi[i]) v = hi[i];
    out[i] = v;
  }
}

__attribute__((target("avx2"))) void clamp_uniform_avx2(const double* x,
                                                        double lo, double hi,
                                                        double* out,
                                                        std::size_t n) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    v = _mm256_min_pd(_mm256_max_pd(v, vlo), vhi);
    _mm256_storeu_pd(out + i, v);
  }
  for (; i < n; ++i) {
    double v = x[i];
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    out[i] = v;
  }
}

__attribute__((target("avx2"))) double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

__attribute__((target("avx2"))) double dot_avx2(const double* x,
                                                const double* y,
                                                std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(
        acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

__attribute__((target("avx2"))) double nrm2sq_avx2(const double* x,
                                                   std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

__attribute__((target("avx2"))) double dist2sq_avx2(const double* x,
                                                    const double* y,
                                                    std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

}  // namespace

bool avx2_supported() { return __builtin_cpu_supports("avx2"); }

const Ops& avx2_ops() {
  static const Ops ops = {
      "avx2",          axpy_avx2,          saxpby_avx2,
      add_scaled_diff_avx2, scale_avx2,    clamp_avx2,
      clamp_uniform_avx2,   dot_avx2,      nrm2sq_avx2,
      dist2sq_avx2,
  };
  return ops;
}

#else  // !NCC_X86

bool avx2_supported() { return false; }
const Ops& avx2_ops() { return scalar_ops(); }

#endif

}  // namespace ncc::kernels

#pragma once

// Dense double-precision kernels backing the estimator and solver inner
// loops. Each kernel has a scalar reference implementation and an AVX2
// variant; the active table is selected once at startup from CPUID (the
// NCC_KERNELS environment variable forces "scalar" or "avx2").
//
// Elementwise kernels (axpy, saxpby, clamp, ...) produce bit-identical
// results across variants. Reductions (dot, nrm2sq, dist2sq) differ only
// in summation order; the equivalence tests bound the discrepancy.

#include <cstddef>

namespace ncc::kernels {

struct Ops {
  const char* name;

  // y += a*x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out = a*x + b*y
  void (*saxpby)(double a, const double* x, double b, const double* y,
                 double* out, std::size_t n);
  // acc += a*(p - q)
  void (*add_scaled_diff)(double a, const double* p, const double* q,
                          double* acc, std::size_t n);
  // x *= a
  void (*scale)(double a, double* x, std::size_t n);
  // out_i = min(max(x_i, lo_i), hi_i)
  void (*clamp)(const double* x, const double* lo, const double* hi,
                double* out, std::size_t n);
  // out_i = min(max(x_i, lo), hi)
  void (*clamp_uniform)(const double* x, double lo, double hi, double* out,
                        std::size_t n);

  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*nrm2sq)(const double* x, std::size_t n);
  // ||x - y||^2
  double (*dist2sq)(const double* x, const double* y, std::size_t n);
};

const Ops& scalar_ops();
const Ops& avx2_ops();  // only dereference when avx2_supported()
bool avx2_supported();

// Runtime-selected table. Stable for the lifetime of the process unless a
// test overrides it with set_active().
const Ops& active();
void set_active(const Ops* ops);  // nullptr restores automatic selection

}  // namespace ncc::kernels

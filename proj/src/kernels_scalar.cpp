#include "ncc/kernels.hpp"

// Scalar reference kernels. These define the semantics the SIMD variants
// are tested against.

namespace ncc::kernels {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void saxpby_scalar(double a, const double* x, double b, const double* y,
                   double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void add_scaled_diff_scalar(double a, const double* p, const double* q,
                            double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += a * (p[i] - q[i]);
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void clamp_scalar(const double* x, const double* lo, const double* hi,
                  double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    if (v < lo[i]) v = lo[i];
    if (v > hi[i]) v = hi[i];
    out[i] = v;
  }
}

void clamp_uniform_scalar(const double* x, double lo, double hi, double* out,
                          std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    out[i] = v;
  }
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double nrm2sq_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double dist2sq_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",        axpy_scalar,          saxpby_scalar,
      add_scaled_diff_scalar, scale_scalar,  clamp_scalar,
      clamp_uniform_scalar,   dot_scalar,    nrm2sq_scalar,
      dist2sq_scalar,
  };
  return ops;
}

}  // namespace ncc::kernels

#pragma once

// Thin span-based helpers over the dispatched kernels.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ncc/kernels.hpp"

namespace ncc {

using Vec = std::vector<double>;
using ConstView = std::span<const double>;
using View = std::span<double>;

inline void axpy(double a, ConstView x, View y) {
  assert(x.size() == y.size());
  kernels::active().axpy(a, x.data(), y.data(), x.size());
}

inline void saxpby(double a, ConstView x, double b, ConstView y, View out) {
  assert(x.size() == y.size() && x.size() == out.size());
  kernels::active().saxpby(a, x.data(), b, y.data(), out.data(), x.size());
}

inline void add_scaled_diff(double a, ConstView p, ConstView q, View acc) {
  assert(p.size() == q.size() && p.size() == acc.size());
  kernels::active().add_scaled_diff(a, p.data(), q.data(), acc.data(),
                                    p.size());
}

inline void scale(double a, View x) {
  kernels::active().scale(a, x.data(), x.size());
}

inline void clamp(ConstView x, ConstView lo, ConstView hi, View out) {
  assert(x.size() == lo.size() && x.size() == hi.size() &&
         x.size() == out.size());
  kernels::active().clamp(x.data(), lo.data(), hi.data(), out.data(),
                          x.size());
}

inline void clamp_uniform(ConstView x, double lo, double hi, View out) {
  assert(x.size() == out.size());
  kernels::active().clamp_uniform(x.data(), lo, hi, out.data(), x.size());
}

inline double dot(ConstView x, ConstView y) {
  assert(x.size() == y.size());
  return kernels::active().dot(x.data(), y.data(), x.size());
}

inline double nrm2sq(ConstView x) {
  return kernels::active().nrm2sq(x.data(), x.size());
}

inline double nrm2(ConstView x) { return std::sqrt(nrm2sq(x)); }

inline double dist2sq(ConstView x, ConstView y) {
  assert(x.size() == y.size());
  return kernels::active().dist2sq(x.data(), y.data(), x.size());
}

inline double dist2(ConstView x, ConstView y) {
  return std::sqrt(dist2sq(x, y));
}

inline void copy(ConstView x, View out) {
  assert(x.size() == out.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
}

inline void fill(View x, double v) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = v;
}

}  // namespace ncc

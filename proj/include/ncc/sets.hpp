#pragma once

// Feasible sets with exact Euclidean projections: coordinate boxes, the
// probability simplex, and infinity-norm balls. Projections are the only
// constraint machinery the solvers need; stationarity is certified through
// the projected-gradient residual.

#include <cstddef>
#include <span>

#include "ncc/vec.hpp"

namespace ncc {

class FeasibleSet {
 public:
  enum class Kind { Box, Simplex, InfBall };

  static FeasibleSet box(Vec lo, Vec hi);
  static FeasibleSet box_uniform(std::size_t dim, double lo, double hi);
  static FeasibleSet simplex(std::size_t dim);
  static FeasibleSet inf_ball(Vec center, double radius);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }

  void project(ConstView p, View out) const;
  Vec project(ConstView p) const;

  double diameter() const;

  // Projected-gradient residual ||p - P(p - eta*g)|| / eta. With
  // exact_box=true on a Box set, returns the exact Euclidean distance from
  // -g to the normal cone instead (coordinatewise: |g_i| in the interior,
  // |min(g_i,0)| at the lower bound, |max(g_i,0)| at the upper bound).
  double stationarity_residual(ConstView p, ConstView g, double eta,
                               bool exact_box = false) const;

  bool contains(ConstView p, double tol = 1e-9) const;

  // Canonical interior-ish point: box midpoint, simplex barycenter, ball
  // center. Used for seed-independent solver initialization.
  Vec center() const;

  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  double radius() const { return radius_; }
  const Vec& ball_center() const { return center_; }

 private:
  FeasibleSet() = default;

  Kind kind_ = Kind::Box;
  std::size_t dim_ = 0;
  Vec lo_, hi_;      // Box
  Vec center_;       // InfBall
  double radius_ = 0.0;
};

}  // namespace ncc

#include "ncc/sets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace ncc {
namespace {

void check_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (set=" +
                                std::to_string(expected) +
                                ", arg=" + std::to_string(got) + ")");
  }
}

// Sort-and-threshold simplex projection (Duchi et al. 2008, "Efficient
// Projections onto the l1-Ball", Algorithm 1 specialized to sum == 1).
// Feasible inputs (within 1e-12 mass error) are returned unchanged, which
// makes the projection exactly idempotent despite rounding in the
// threshold step.
void project_simplex(ConstView p, View out) {
  const std::size_t n = p.size();
  {
    double sum = 0.0;
    bool nonneg = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] < 0.0) {
        nonneg = false;
        break;
      }
      sum += p[i];
    }
    if (nonneg && std::abs(sum - 1.0) <= 1e-12) {
      for (std::size_t i = 0; i < n; ++i) out[i] = p[i];
      return;
    }
  }
  thread_local std::vector<double> u;
  u.assign(p.begin(), p.end());
  std::sort(u.begin(), u.end(), std::greater<double>());

  double cumsum = 0.0;
  double theta = 0.0;
  std::size_t rho = 0;
  double rho_cumsum = 1.0;  // value used for theta at the selected rho
  for (std::size_t j = 0; j < n; ++j) {
    cumsum += u[j];
    if (u[j] - (cumsum - 1.0) / static_cast<double>(j + 1) > 0.0) {
      rho = j + 1;
      rho_cumsum = cumsum;
    }
  }
  // rho >= 1 always: the largest coordinate passes the test at j = 0.
  theta = (rho_cumsum - 1.0) / static_cast<double>(rho);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(p[i] - theta, 0.0);

  // Refine the threshold so the output mass is 1 to within a few ulps even
  // when the inputs are large and p_i - theta cancels badly.
  for (int round = 0; round < 2; ++round) {
    double mass = 0.0;
    std::size_t support = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (out[i] > 0.0) {
        mass += out[i];
        ++support;
      }
    }
    if (support == 0 || std::abs(mass - 1.0) <= 1e-15) break;
    const double corr = (mass - 1.0) / static_cast<double>(support);
    for (std::size_t i = 0; i < n; ++i) {
      if (out[i] > 0.0) out[i] = std::max(out[i] - corr, 0.0);
    }
  }
}

}  // namespace

FeasibleSet FeasibleSet::box(Vec lo, Vec hi) {
  if (lo.size() != hi.size() || lo.empty()) {
    throw std::invalid_argument("FeasibleSet::box: bounds must be nonempty and equally sized");
  }
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
      throw std::invalid_argument("FeasibleSet::box: need finite lo <= hi (compact set)");
    }
  }
  FeasibleSet s;
  s.kind_ = Kind::Box;
  s.dim_ = lo.size();
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

FeasibleSet FeasibleSet::box_uniform(std::size_t dim, double lo, double hi) {
  return box(Vec(dim, lo), Vec(dim, hi));
}

FeasibleSet FeasibleSet::simplex(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("FeasibleSet::simplex: dim must be positive");
  FeasibleSet s;
  s.kind_ = Kind::Simplex;
  s.dim_ = dim;
  return s;
}

FeasibleSet FeasibleSet::inf_ball(Vec center, double radius) {
  if (center.empty()) throw std::invalid_argument("FeasibleSet::inf_ball: empty center");
  if (!(radius > 0.0)) throw std::invalid_argument("FeasibleSet::inf_ball: radius must be positive");
  FeasibleSet s;
  s.kind_ = Kind::InfBall;
  s.dim_ = center.size();
  s.radius_ = radius;
  s.center_ = std::move(center);
  return s;
}

void FeasibleSet::project(ConstView p, View out) const {
  check_dim(dim_, p.size(), "project");
  check_dim(dim_, out.size(), "project");
  switch (kind_) {
    case Kind::Box:
      clamp(p, lo_, hi_, out);
      break;
    case Kind::Simplex:
      project_simplex(p, out);
      break;
    case Kind::InfBall:
      for (std::size_t i = 0; i < dim_; ++i) {
        double v = p[i];
        const double lo = center_[i] - radius_;
        const double hi = center_[i] + radius_;
        out[i] = v < lo ? lo : (v > hi ? hi : v);
      }
      break;
  }
}

Vec FeasibleSet::project(ConstView p) const {
  Vec out(dim_);
  project(p, out);
  return out;
}

double FeasibleSet::diameter() const {
  switch (kind_) {
    case Kind::Box:
      return dist2(hi_, lo_);
    case Kind::Simplex:
      // max pairwise distance between vertices e_i, e_j
      return dim_ >= 2 ? std::sqrt(2.0) : 0.0;
    case Kind::InfBall:
      return 2.0 * radius_ * std::sqrt(static_cast<double>(dim_));
  }
  return 0.0;
}

double FeasibleSet::stationarity_residual(ConstView p, ConstView g, double eta,
                                          bool exact_box) const {
  check_dim(dim_, p.size(), "stationarity_residual");
  check_dim(dim_, g.size(), "stationarity_residual");
  if (!(eta > 0.0)) {
    throw std::invalid_argument("stationarity_residual: eta must be positive");
  }
  if (exact_box) {
    if (kind_ != Kind::Box) {
      throw std::invalid_argument(
          "stationarity_residual: exact mode is only available for Box sets");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      double r;
      if (lo_[i] == hi_[i]) {
        r = 0.0;  // pinched coordinate: the normal cone is all of R
      } else if (p[i] <= lo_[i]) {
        r = std::min(g[i], 0.0);
      } else if (p[i] >= hi_[i]) {
        r = std::max(g[i], 0.0);
      } else {
        r = g[i];
      }
      s += r * r;
    }
    return std::sqrt(s);
  }
  thread_local Vec step, proj;
  step.resize(dim_);
  proj.resize(dim_);
  saxpby(1.0, p, -eta, g, step);
  project(step, proj);
  return dist2(p, proj) / eta;
}

bool FeasibleSet::contains(ConstView p, double tol) const {
  check_dim(dim_, p.size(), "contains");
  switch (kind_) {
    case Kind::Box:
      for (std::size_t i = 0; i < dim_; ++i) {
        if (p[i] < lo_[i] - tol || p[i] > hi_[i] + tol) return false;
      }
      return true;
    case Kind::Simplex: {
      double sum = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        if (p[i] < -tol) return false;
        sum += p[i];
      }
      return std::abs(sum - 1.0) <= tol;
    }
    case Kind::InfBall:
      for (std::size_t i = 0; i < dim_; ++i) {
        if (std::abs(p[i] - center_[i]) > radius_ + tol) return false;
      }
      return true;
  }
  return false;
}

Vec FeasibleSet::center() const {
  Vec c(dim_);
  switch (kind_) {
    case Kind::Box:
      for (std::size_t i = 0; i < dim_; ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
      break;
    case Kind::Simplex:
      fill(c, 1.0 / static_cast<double>(dim_));
      break;
    case Kind::InfBall:
      c = center_;
      break;
  }
  return c;
}

}  // namespace ncc

#include "ncc/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ncc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void fill_shared_constants(TheoryConstants& tc, double eta_x, double eta_y) {
  tc.sigma1 = tc.r / (tc.r - tc.L);
  tc.sigma2 = (2.0 * tc.r - tc.L) / (tc.r - tc.L);
  if (!(tc.sigma1 <= 2.0 + 1e-12) || !(tc.sigma2 <= 3.0 + 1e-12)) {
    throw std::logic_error(
        "theory constants: sigma bounds violated (requires 2L <= r <= 4L)");
  }
  tc.L_d = tc.L + tc.L * tc.sigma2;
  tc.omega = (eta_x * tc.L + eta_x * tc.r + 1.0) / (eta_x * tc.r - eta_x * tc.L);
  tc.kappa = (1.0 + eta_y * tc.L * tc.sigma2 + eta_y * tc.L) /
             (eta_y * (tc.r - tc.L)) * tc.D_Y;
}

void check_range(double L, double r) {
  if (!(r >= 2.0 * L - 1e-12 && r <= 4.0 * L + 1e-12)) {
    throw std::invalid_argument(
        "theory: smoothing weight must satisfy 2L <= r <= 4L");
  }
}

double clamp_L(double L, std::vector<std::string>& warnings) {
  if (!(L > 0.0)) throw std::invalid_argument("theory: L must be positive");
  if (L < 1.0) {
    warnings.push_back("smoothness estimate below 1; clamped to L = 1");
    return 1.0;
  }
  return L;
}

}  // namespace

StepSizeResult pvr_step_sizes(double L, double p, double r, double D_Y) {
  StepSizeResult out;
  if (!(p > 0.0) || p > 1.0) {
    throw std::invalid_argument("pvr_step_sizes: need p in (0, 1]");
  }
  if (!(D_Y >= 0.0)) throw std::invalid_argument("pvr_step_sizes: bad diameter");
  L = clamp_L(L, out.warnings);
  check_range(L, r);

  TheoryConstants& tc = out.constants;
  tc.L = L;
  tc.r = r;
  tc.D_Y = D_Y;
  tc.p = p;
  tc.gamma = 4.0 + 2.0 / L;

  out.eta_x = p / (p * (1.0 + 24.0 * L + 2.0 * L * L) + 80.0 * L * L * tc.gamma);
  const double omega =
      (out.eta_x * L + out.eta_x * r + 1.0) / (out.eta_x * r - out.eta_x * L);
  out.eta_y = std::min(p / (2.0 * p * (1.0 + 9.0 * L) + 10.0 * tc.gamma * L * L),
                       1.0 / (2.0 * L * (1.0 + omega) * (1.0 + omega)));
  out.rho = 4.0 * p / (1200.0 * p + 9.0 * r * tc.gamma);

  fill_shared_constants(tc, out.eta_x, out.eta_y);
  // verify the omega fixed point by substitution
  if (!(out.eta_y <=
        1.0 / (2.0 * L * (1.0 + tc.omega) * (1.0 + tc.omega)) + 1e-18)) {
    throw std::logic_error("pvr_step_sizes: omega consistency check failed");
  }
  return out;
}

StepSizeResult zerosarah_step_sizes(double L, std::size_t n, double a, double r,
                                    double D_Y) {
  StepSizeResult out;
  if (n == 0) throw std::invalid_argument("zerosarah_step_sizes: need n >= 1");
  if (!(a >= 2.0)) throw std::invalid_argument("zerosarah_step_sizes: need a >= 2");
  if (!(D_Y >= 0.0)) {
    throw std::invalid_argument("zerosarah_step_sizes: bad diameter");
  }
  L = clamp_L(L, out.warnings);
  check_range(L, r);

  TheoryConstants& tc = out.constants;
  tc.L = L;
  tc.r = r;
  tc.D_Y = D_Y;
  tc.a = a;

  double b_real = std::ceil(a * std::sqrt(static_cast<double>(n)));
  if (b_real > static_cast<double>(n)) {
    out.warnings.push_back(
        "a*sqrt(n) exceeds n; batch clamped to n (degenerate full-batch mode)");
    b_real = static_cast<double>(n);
  }
  tc.b = static_cast<std::size_t>(b_real);
  tc.lambda = 1.0 / b_real;
  tc.b_plus = 1.0 + b_real;
  tc.gamma = 2.0 / tc.lambda + 2.0 / (5.0 * tc.lambda * L);
  tc.tau = 2.0 * tc.gamma * tc.lambda * tc.lambda;
  tc.beta = 1.0 / b_real;
  const double frac = 1.0 - b_real / static_cast<double>(n);
  tc.zeta = frac * (1.0 + tc.beta);
  tc.xi = frac * (1.0 + 1.0 / tc.beta);

  const double b = b_real;
  const double L2 = L * L;
  out.eta_x = b / (b * (1.0 + 24.0 * L + 2.0 * L2) + 310.0 * L2 * tc.gamma +
                   160.0 * b * tc.tau * L2 * tc.b_plus);
  const double omega =
      (out.eta_x * L + out.eta_x * r + 1.0) / (out.eta_x * r - out.eta_x * L);
  out.eta_y =
      std::min(b / (b * (2.0 + 18.0 * L + 20.0 * tc.tau * L2 * tc.b_plus) +
                    40.0 * tc.gamma * L2),
               1.0 / (4.0 * L * (1.0 + omega) * (1.0 + omega)));
  out.rho = 4.0 * b / (1200.0 * b + 36.0 * r * tc.gamma +
                       18.0 * b * tc.tau * r * tc.b_plus);

  fill_shared_constants(tc, out.eta_x, out.eta_y);
  if (!(out.eta_y <=
        1.0 / (4.0 * L * (1.0 + tc.omega) * (1.0 + tc.omega)) + 1e-18)) {
    throw std::logic_error("zerosarah_step_sizes: omega consistency check failed");
  }
  return out;
}

std::pair<double, double> game_stationarity(const MinimaxProblem& problem,
                                            ConstView x, ConstView y, double eta,
                                            OracleCounters* diag) {
  return game_residuals(problem, x, y, eta, diag);
}

// ---------------------------------------------------------------------------
// Small dense linear solve (partial pivoting); returns false when the
// system is numerically singular.

namespace {

bool solve_dense(std::vector<double>& m, std::vector<double>& rhs,
                 std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(m[col * n + col]);
    for (std::size_t row = col + 1; row < n; ++row) {
      const double v = std::abs(m[row * n + col]);
      if (v > best) {
        best = v;
        piv = row;
      }
    }
    if (best < 1e-11) return false;
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) {
        std::swap(m[piv * n + k], m[col * n + k]);
      }
      std::swap(rhs[piv], rhs[col]);
    }
    const double inv = 1.0 / m[col * n + col];
    for (std::size_t row = col + 1; row < n; ++row) {
      const double f = m[row * n + col] * inv;
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) m[row * n + k] -= f * m[col * n + k];
      rhs[row] -= f * rhs[col];
    }
  }
  for (std::size_t row = n; row-- > 0;) {
    double s = rhs[row];
    for (std::size_t k = row + 1; k < n; ++k) s -= m[row * n + k] * rhs[k];
    rhs[row] = s / m[row * n + row];
  }
  return true;
}

}  // namespace

double simplex_concave_qp(ConstView q, ConstView q_matrix, std::size_t dim,
                          Vec* argmax_y) {
  if (dim == 0 || dim > 20) {
    throw std::invalid_argument("simplex_concave_qp: dimension out of range");
  }
  if (q.size() != dim || q_matrix.size() != dim * dim) {
    throw std::invalid_argument("simplex_concave_qp: size mismatch");
  }
  double best = -kInf;
  Vec best_y(dim, 0.0);
  std::vector<std::size_t> support;
  std::vector<double> sys, rhs;
  const std::uint32_t full = (1u << dim) - 1u;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    support.clear();
    for (std::size_t j = 0; j < dim; ++j) {
      if (mask & (1u << j)) support.push_back(j);
    }
    const std::size_t k = support.size();
    // KKT system on the support: [Q_SS 1; 1' 0][y_S; mu] = [q_S; 1].
    // Any feasible candidate is a feasible simplex point, so the best
    // feasible candidate over all supports is the exact maximizer; flat
    // (singular) faces are covered by their sub-supports.
    const std::size_t m = k + 1;
    sys.assign(m * m, 0.0);
    rhs.assign(m, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        sys[r * m + c] = q_matrix[support[r] * dim + support[c]];
      }
      sys[r * m + k] = 1.0;
      sys[k * m + r] = 1.0;
      rhs[r] = q[support[r]];
    }
    rhs[k] = 1.0;
    if (!solve_dense(sys, rhs, m)) continue;
    bool feasible = true;
    for (std::size_t r = 0; r < k; ++r) {
      if (rhs[r] < -1e-11) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    double val = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      val += q[support[r]] * rhs[r];
      double qy = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        qy += q_matrix[support[r] * dim + support[c]] * rhs[c];
      }
      val -= 0.5 * rhs[r] * qy;
    }
    if (val > best) {
      best = val;
      std::fill(best_y.begin(), best_y.end(), 0.0);
      for (std::size_t r = 0; r < k; ++r) {
        best_y[support[r]] = std::max(rhs[r], 0.0);
      }
    }
  }
  if (best == -kInf) {
    throw DiagnosticError("simplex_concave_qp: no feasible support found");
  }
  if (argmax_y) {
    FeasibleSet::simplex(dim).project(best_y, best_y);
    *argmax_y = std::move(best_y);
  }
  return best;
}

// ---------------------------------------------------------------------------
// InnerSolver

InnerSolver::InnerSolver(RegularizedOracle& oracle, InnerSolverOptions opts)
    : oracle_(&oracle), opts_(opts) {
  lipschitz_ = oracle.problem().lipschitz_estimate();
}

Vec InnerSolver::min_x(ConstView y, ConstView z) {
  const MinimaxProblem& prob = oracle_->problem();
  Vec x(prob.dim_x());
  if (prob.inner_argmin_x(y, z, oracle_->r(), x)) return x;
  if (!(oracle_->r() > lipschitz_)) {
    throw DiagnosticError(
        "inner_min_x: need r > L for a strongly convex inner problem");
  }
  const double step = 1.0 / (lipschitz_ + oracle_->r());
  prob.set_x().project(z, x);
  Vec g(x.size()), trial(x.size()), xn(x.size());
  for (std::size_t iter = 0; iter < opts_.min_cap; ++iter) {
    oracle_->full_grad_x(x, z, y, g, Lane::Diag);
    saxpby(1.0, x, -step, g, trial);
    prob.set_x().project(trial, xn);
    const double res = dist2(x, xn) / step;
    x.swap(xn);
    if (res <= opts_.tol) return x;
  }
  throw DiagnosticError("inner_min_x: iteration cap exceeded");
}

double InnerSolver::dual_value(ConstView y, ConstView z) {
  Vec x = min_x(y, z);
  return oracle_->k_value(x, z, y);
}

bool InnerSolver::toy_dual_closed_form(ConstView z, double& value,
                                       Vec* argmax_y) {
  const auto* toy = dynamic_cast<const ToyBilinearProblem*>(&oracle_->problem());
  if (!toy) return false;
  const std::size_t dy = toy->dim_y();
  if (dy > opts_.enumeration_limit) return false;
  const double r = oracle_->r();
  const double c = toy->curvature();
  const double q = r - c;
  if (!(q > 0.0)) return false;
  // Certify the box is inactive at x(y,z) for every simplex point: the
  // unconstrained minimizer is (r z - A y)/(r - c) and |(A y)_j| is at most
  // the largest |A_jk| of the row.
  const std::size_t dx = toy->dim_x();
  const Vec& a = toy->mean_matrix();
  for (std::size_t j = 0; j < dx; ++j) {
    double rowmax = 0.0;
    for (std::size_t k = 0; k < dy; ++k) {
      rowmax = std::max(rowmax, std::abs(a[j * dy + k]));
    }
    if ((r * std::abs(z[j]) + rowmax) / q > toy->box_halfwidth() * (1.0 - 1e-9)) {
      return false;
    }
  }
  // With the box inactive, d(y,z) is the concave quadratic
  //   (r z'A y)/q - ||A y||^2/(2q) - r c ||z||^2/(2q).
  Vec lin(dy, 0.0);
  for (std::size_t j = 0; j < dx; ++j) {
    axpy(r / q * z[j], ConstView(a).subspan(j * dy, dy), lin);
  }
  Vec qmat(dy * dy, 0.0);
  for (std::size_t k1 = 0; k1 < dy; ++k1) {
    for (std::size_t k2 = k1; k2 < dy; ++k2) {
      double s = 0.0;
      for (std::size_t j = 0; j < dx; ++j) {
        s += a[j * dy + k1] * a[j * dy + k2];
      }
      qmat[k1 * dy + k2] = s / q;
      qmat[k2 * dy + k1] = s / q;
    }
  }
  const double constant = -r * c * nrm2sq(z) / (2.0 * q);
  value = simplex_concave_qp(lin, qmat, dy, argmax_y) + constant;
  return true;
}

double InnerSolver::prox_value_generic(ConstView z, Vec* argmax_y) {
  const MinimaxProblem& prob = oracle_->problem();
  const double r = oracle_->r();
  const double L = lipschitz_;
  if (!(r > L)) throw DiagnosticError("prox_value: need r > L");
  const double sigma2 = (2.0 * r - L) / (r - L);
  const double step = 1.0 / (L + L * sigma2);  // 1 / L_d
  Vec y = prob.set_y().center();
  Vec g(y.size()), trial(y.size()), yn(y.size());
  double best = -kInf;
  Vec ybest = y;
  for (std::size_t iter = 0; iter < opts_.max_cap; ++iter) {
    Vec x = min_x(y, z);
    const double dval = oracle_->k_value(x, z, y);
    if (dval > best) {
      best = dval;
      ybest = y;
    }
    oracle_->full_grad_y(x, y, g, Lane::Diag);
    saxpby(1.0, y, step, g, trial);
    prob.set_y().project(trial, yn);
    const double res = dist2(y, yn) / step;
    y.swap(yn);
    if (res <= opts_.tol) {
      Vec xf = min_x(y, z);
      const double df = oracle_->k_value(xf, z, y);
      if (df > best) {
        best = df;
        ybest = y;
      }
      if (argmax_y) *argmax_y = std::move(ybest);
      return best;
    }
  }
  throw DiagnosticError("prox_value: ascent iteration cap exceeded");
}

double InnerSolver::prox_value(ConstView z, Vec* argmax_y) {
  double value = 0.0;
  if (toy_dual_closed_form(z, value, argmax_y)) return value;
  return prox_value_generic(z, argmax_y);
}

Vec InnerSolver::x_star(ConstView z) {
  Vec yz;
  prox_value(z, &yz);
  return min_x(yz, z);
}

double InnerSolver::h_value(ConstView x, ConstView z) {
  const MinimaxProblem& prob = oracle_->problem();
  if (auto primal = prob.exact_primal(x)) {
    return *primal + 0.5 * oracle_->r() * dist2sq(x, z);
  }
  // projected ascent on the concave y-objective K(x, z; .)
  const double step = 1.0 / std::max(lipschitz_, 1e-12);
  Vec y = prob.set_y().center();
  Vec g(y.size()), trial(y.size()), yn(y.size());
  double best = -kInf;
  for (std::size_t iter = 0; iter < opts_.max_cap; ++iter) {
    best = std::max(best, oracle_->k_value(x, z, y));
    oracle_->full_grad_y(x, y, g, Lane::Diag);
    saxpby(1.0, y, step, g, trial);
    prob.set_y().project(trial, yn);
    const double res = dist2(y, yn) / step;
    y.swap(yn);
    if (res <= opts_.tol) return std::max(best, oracle_->k_value(x, z, y));
  }
  throw DiagnosticError("h_value: ascent iteration cap exceeded");
}

Vec InnerSolver::y_plus(ConstView y, ConstView z, double eta_y) {
  Vec x = min_x(y, z);
  Vec g(y.size());
  oracle_->full_grad_y(x, y, g, Lane::Diag);
  Vec trial(y.size());
  saxpby(1.0, y, eta_y, g, trial);
  return oracle_->problem().set_y().project(trial);
}

// ---------------------------------------------------------------------------
// Potential function.

PotentialBreakdown potential_value(RegularizedOracle& oracle, InnerSolver& inner,
                                   const TheoryConstants& tc, Scheme scheme,
                                   ConstView x, ConstView y, ConstView z,
                                   ConstView v, ConstView w, ConstView d_flat,
                                   ConstView h_flat) {
  PotentialBreakdown out;
  out.k = oracle.k_value(x, z, y);
  out.dual = inner.dual_value(y, z);
  out.prox = inner.prox_value(z);

  Vec gx(x.size()), gy(y.size());
  oracle.full_grad_x(x, z, y, gx, Lane::Diag);
  oracle.full_grad_y(x, y, gy, Lane::Diag);
  out.est_err_x_sq = dist2sq(gx, v);
  out.est_err_y_sq = dist2sq(gy, w);

  const double V = out.k - 2.0 * out.dual + 2.0 * out.prox;
  if (scheme == Scheme::PvrSgda) {
    out.phi = V + tc.gamma / (2.0 * tc.p) * (out.est_err_x_sq + out.est_err_y_sq);
    return out;
  }
  if (scheme != Scheme::ZeroSarahSgda) {
    throw std::invalid_argument("potential_value: scheme has no potential form");
  }
  const std::size_t n = oracle.problem().components();
  const std::size_t dx = x.size(), dy = y.size();
  if (d_flat.size() != n * dx || h_flat.size() != n * dy) {
    throw std::invalid_argument("potential_value: tracker storage missing");
  }
  Vec buf(std::max(dx, dy));
  double tx = 0.0, ty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    View bx(buf.data(), dx);
    oracle.comp_grad_x(i, x, z, y, bx, Lane::Diag);
    tx += dist2sq(ConstView(bx), d_flat.subspan(i * dx, dx));
  }
  for (std::size_t i = 0; i < n; ++i) {
    View by(buf.data(), dy);
    oracle.comp_grad_y(i, x, y, by, Lane::Diag);
    ty += dist2sq(ConstView(by), h_flat.subspan(i * dy, dy));
  }
  out.tracker_err_x = tx / static_cast<double>(n);
  out.tracker_err_y = ty / static_cast<double>(n);
  out.phi = V + tc.gamma * (out.est_err_x_sq + out.est_err_y_sq) +
            tc.tau * (out.tracker_err_x + out.tracker_err_y);
  return out;
}

PotentialBreakdown potential_value(SolverLoop& loop, InnerSolver& inner,
                                   const TheoryConstants& tc) {
  const EstimatorState& st = loop.est();
  return potential_value(loop.oracle(), inner, tc, loop.config().scheme,
                         loop.x(), loop.y(), loop.z(), st.v, st.w, st.d_flat,
                         st.h_flat);
}

RunHooks make_potential_hook(const TheoryConstants& tc, InnerSolverOptions opts) {
  RunHooks hooks;
  hooks.potential = [tc, opts](SolverLoop& loop) -> double {
    try {
      InnerSolver inner(loop.oracle(), opts);
      return potential_value(loop, inner, tc).phi;
    } catch (const DiagnosticError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  return hooks;
}

// ---------------------------------------------------------------------------
// Expected descent.

DescentReport check_descent(const MinimaxProblem& problem,
                            const SolverConfig& config,
                            const TheoryConstants& tc,
                            std::span<const std::uint64_t> probes,
                            std::size_t replicas, std::uint64_t seed,
                            InnerSolverOptions inner_opts) {
  if (replicas < 30) {
    throw std::invalid_argument("check_descent: need at least 30 replicas");
  }
  if (config.scheme != Scheme::PvrSgda &&
      config.scheme != Scheme::ZeroSarahSgda) {
    throw std::invalid_argument(
        "check_descent: only the smoothed VR schemes have a potential");
  }
  std::vector<std::uint64_t> sorted(probes.begin(), probes.end());
  std::sort(sorted.begin(), sorted.end());

  DescentReport report;
  report.scheme = config.scheme;
  report.replicas = replicas;

  const double cx = 1.0 / (2.0 * config.eta_x);
  const double cy = 1.0 / (4.0 * config.eta_y);
  const double cz = tc.r / (6.0 * config.rho);
  double cv, cw, ctau = 0.0;
  if (config.scheme == Scheme::PvrSgda) {
    cv = cw = tc.gamma / 4.0;
  } else {
    cv = cw = tc.gamma * tc.lambda / 2.0;
    ctau = tc.tau / std::sqrt(static_cast<double>(problem.components()));
  }

  SolverLoop master(problem, config);
  std::vector<double> diffs(replicas);
  for (std::uint64_t probe : sorted) {
    while (master.t() < probe) master.iterate();
    const Vec x_t = master.x();
    const Vec y_t = master.y();
    const Vec z_t = master.z();
    InnerSolver inner(master.oracle(), inner_opts);
    const Vec yp = inner.y_plus(y_t, z_t, config.eta_y);
    const double dyp = dist2(y_t, yp);
    const double coupling = 24.0 * tc.r * config.rho * tc.kappa * dyp;
    const double cy_term = cy * dyp * dyp;

    double lhs_sum = 0.0, rhs_sum = 0.0;
    for (std::size_t rep = 0; rep < replicas; ++rep) {
      SolverLoop rl = master;
      rl.reseed(seed, fnv1a("descent-replica") + probe * 1000003ULL + rep);
      InnerSolver rinner(rl.oracle(), inner_opts);
      rl.estimator_update();
      const PotentialBreakdown phi_t = potential_value(rl, rinner, tc);
      rl.gda_step();
      const double dxsq = dist2sq(rl.x(), x_t);
      const double dzsq = dist2sq(rl.z(), z_t);
      rl.estimator_update();
      const PotentialBreakdown phi_t1 = potential_value(rl, rinner, tc);

      const double lhs = phi_t.phi - phi_t1.phi;
      const double rhs = cx * dxsq + cy_term + cz * dzsq +
                         cv * phi_t.est_err_x_sq + cw * phi_t.est_err_y_sq +
                         ctau * (phi_t.tracker_err_x + phi_t.tracker_err_y) -
                         coupling;
      diffs[rep] = lhs - rhs;
      lhs_sum += lhs;
      rhs_sum += rhs;
    }
    const double nrep = static_cast<double>(replicas);
    const double mean_diff =
        std::accumulate(diffs.begin(), diffs.end(), 0.0) / nrep;
    double var = 0.0;
    for (double d : diffs) var += (d - mean_diff) * (d - mean_diff);
    var /= (nrep - 1.0);
    const double se = std::sqrt(var / nrep);

    DescentProbe pr;
    pr.iteration = probe;
    pr.lhs = lhs_sum / nrep;
    pr.rhs = rhs_sum / nrep;
    pr.stderr_ = se;
    const double slack = 1e-12 * std::max(1.0, std::abs(pr.lhs));
    pr.satisfied = mean_diff >= -(3.0 * se + slack);
    report.probes.push_back(pr);
  }
  report.passed = std::all_of(report.probes.begin(), report.probes.end(),
                              [](const DescentProbe& p) { return p.satisfied; });
  return report;
}

}  // namespace ncc

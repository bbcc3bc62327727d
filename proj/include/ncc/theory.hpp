#pragma once

// Analysis-side machinery: step-size calculators with their constants,
// game-stationarity evaluation, inner oracles for the regularized dual
// (d, P, x(y,z), x*(z), y_+), the potential function, and the Monte-Carlo
// expected-descent checker.

#include <cstdint>
#include <span>
#include <vector>

#include "ncc/solvers.hpp"

namespace ncc {

struct TheoryConstants {
  double L = 0.0;          // smoothness constant (>= 1 after clamping)
  double r = 0.0;          // smoothing weight, in [2L, 4L]
  double D_Y = 0.0;        // diameter of the dual feasible set
  double sigma1 = 0.0;     // r / (r - L)
  double sigma2 = 0.0;     // (2r - L) / (r - L)
  double omega = 0.0;      // (eta_x L + eta_x r + 1) / (eta_x r - eta_x L)
  double L_d = 0.0;        // L + L sigma2
  double gamma = 0.0;
  double tau = 0.0;        // ZeroSARAH only
  double kappa = 0.0;      // dual error-bound constant
  // scheme parameters
  double p = 0.0;          // PVR
  std::size_t b = 0;       // ZeroSARAH batch
  double lambda = 0.0;
  double b_plus = 0.0;     // 1 + b
  double a = 0.0;
  double beta = 0.0;       // 1/b
  double zeta = 0.0;       // (1 - b/n)(1 + beta)
  double xi = 0.0;         // (1 - b/n)(1 + 1/beta)
};

struct StepSizeResult {
  double eta_x = 0.0;
  double eta_y = 0.0;
  double rho = 0.0;
  TheoryConstants constants;
  std::vector<std::string> warnings;
};

// Step-size upper bounds for the probabilistic scheme; defaults set the
// steps at the bounds. L < 1 is clamped up with a warning; r must lie in
// [2L, 4L]. The eta_x <-> omega circularity is resolved by fixing eta_x at
// its bound first (the bound does not involve omega), then computing omega
// and eta_y; the result is re-verified by substitution.
StepSizeResult pvr_step_sizes(double L, double p, double r, double D_Y);

// ZeroSARAH bounds: b = ceil(a sqrt(n)) clamped to n (with a warning in
// the degenerate full-batch case), lambda = 1/b.
StepSizeResult zerosarah_step_sizes(double L, std::size_t n, double a,
                                    double r, double D_Y);

// Definition-style stationarity residuals using exact full gradients.
std::pair<double, double> game_stationarity(const MinimaxProblem& problem,
                                            ConstView x, ConstView y,
                                            double eta,
                                            OracleCounters* diag = nullptr);

// ---------------------------------------------------------------------------
// Inner oracles. These never run on the solver hot path; all their gradient
// work lands on the oracle's diagnostic counter.

struct DiagnosticError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InnerSolverOptions {
  double tol = 1e-8;
  std::size_t min_cap = 100000;   // projected-gradient iterations for min_x
  std::size_t max_cap = 1000000;  // ascent iterations for the concave max
  std::size_t enumeration_limit = 14;  // dual QP enumeration up to this dim
};

class InnerSolver {
 public:
  InnerSolver(RegularizedOracle& oracle, InnerSolverOptions opts = {});

  // x(y,z) = argmin_x K(x,z;y); closed form when the problem provides one,
  // projected gradient with step 1/(L+r) otherwise.
  Vec min_x(ConstView y, ConstView z);
  // d(y,z) = K(x(y,z), z; y)
  double dual_value(ConstView y, ConstView z);
  // P(z) = max_y d(y,z); fills argmax_y when requested.
  double prox_value(ConstView z, Vec* argmax_y = nullptr);
  // x*(z) = x(y(z), z)
  Vec x_star(ConstView z);
  // h(x,z) = max_y K(x,z;y)
  double h_value(ConstView x, ConstView z);
  // y_+ = P_Y(y + eta_y grad_y K(x(y,z), z; y))
  Vec y_plus(ConstView y, ConstView z, double eta_y);

  const InnerSolverOptions& options() const { return opts_; }

 private:
  double prox_value_generic(ConstView z, Vec* argmax_y);
  bool toy_dual_closed_form(ConstView z, double& value, Vec* argmax_y);

  RegularizedOracle* oracle_;
  InnerSolverOptions opts_;
  double lipschitz_ = 0.0;
};

// Concave quadratic maximization over the probability simplex by active-set
// enumeration: max q'y - 0.5 y'Q y s.t. y >= 0, sum y = 1. Exact for any
// PSD Q up to the stated dimension limit. Used as the reference dual solve
// on the toy problem; the generic path cross-checks against it in tests.
double simplex_concave_qp(ConstView q, ConstView q_matrix, std::size_t dim,
                          Vec* argmax_y = nullptr);

// ---------------------------------------------------------------------------
// Potential function.

struct PotentialBreakdown {
  double k = 0.0;           // K_t
  double dual = 0.0;        // d(y_t, z_t)
  double prox = 0.0;        // P(z_t)
  double est_err_x_sq = 0.0;
  double est_err_y_sq = 0.0;
  double tracker_err_x = 0.0;  // (1/n) sum_i ||grad_x K_i - d_i||^2
  double tracker_err_y = 0.0;
  double phi = 0.0;
};

PotentialBreakdown potential_value(RegularizedOracle& oracle, InnerSolver& inner,
                                   const TheoryConstants& tc, Scheme scheme,
                                   ConstView x, ConstView y, ConstView z,
                                   ConstView v, ConstView w, ConstView d_flat,
                                   ConstView h_flat);

// Convenience overload reading everything from a solver loop (requires a
// live estimator, i.e. call between estimator_update and gda_step).
PotentialBreakdown potential_value(SolverLoop& loop, InnerSolver& inner,
                                   const TheoryConstants& tc);

// Hook factory for run_solver tracing.
RunHooks make_potential_hook(const TheoryConstants& tc,
                             InnerSolverOptions opts = {});

// ---------------------------------------------------------------------------
// Expected one-step potential descent, estimated by replica averaging from
// a common state. Each probe reports the estimated E[Phi_t - Phi_{t+1}],
// the step-size-weighted right-hand side (with the coupling term
// 24 r rho kappa ||y_t - y_+|| subtracted), the paired standard error, and
// whether lhs >= rhs - 3 se.

struct DescentProbe {
  std::uint64_t iteration = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double stderr_ = 0.0;
  bool satisfied = false;
};

struct DescentReport {
  Scheme scheme = Scheme::PvrSgda;
  std::size_t replicas = 0;
  std::vector<DescentProbe> probes;
  bool passed = false;  // all probes satisfied
};

DescentReport check_descent(const MinimaxProblem& problem,
                            const SolverConfig& config,
                            const TheoryConstants& tc,
                            std::span<const std::uint64_t> probes,
                            std::size_t replicas, std::uint64_t seed,
                            InnerSolverOptions inner_opts = {});

}  // namespace ncc

#pragma once

// Single-loop smoothed gradient descent-ascent: projected descent in x,
// projected ascent in y, proximal-center averaging z <- z + rho(x - z),
// composed with any of the gradient estimators. Four named solvers:
//   PVR-SGDA        probabilistic variance reduction on K
//   ZeroSARAH-SGDA  tracker-based variance reduction on K, full-gradient-free
//   StocGDA         plain minibatch two-timescale GDA directly on f (r = 0)
//   VR-AGDA         alternating GDA with SVRG estimators on f (r = 0)

#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "ncc/estimators.hpp"
#include "ncc/problems.hpp"
#include "ncc/rng.hpp"

namespace ncc {

enum class Scheme { PvrSgda, ZeroSarahSgda, StocGda, VrAgda };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

struct SolverConfig {
  Scheme scheme = Scheme::PvrSgda;
  double eta_x = 0.0;
  double eta_y = 0.0;
  double rho = 0.0;       // unused by StocGDA / VR-AGDA
  double r = 0.0;         // smoothing weight; forced to 0 for the f-path schemes
  double p = 0.5;         // PVR full-gradient probability
  std::size_t batch = 1;  // b (ZeroSARAH) or b_s (PVR tails / StocGDA / VR-AGDA)
  double lambda = 0.0;    // ZeroSARAH mixing weight; 0 -> 1/b
  std::size_t snapshot_period = 0;  // VR-AGDA m; 0 -> n/batch
  bool zs_literal_init = false;     // zero-initialized trackers, no warm pass
  bool coupled_batches = true;      // share the batch between x and y parts
  std::uint64_t iterations = 0;     // T
  std::uint64_t seed = 1;           // master seed
  std::uint64_t run_id = 0;         // stream id under the master seed
  std::uint64_t cadence = 1;        // trace every cadence iterations
  bool diag_estimator_error = true;
  bool diag_potential = false;
  double residual_eta = 0.0;        // 0 -> 1/L
  std::uint64_t resum_period = 1024;
  bool track_timing = false;
};

struct TraceRecord {
  std::uint64_t t = 0;
  std::uint64_t oracle_count = 0;
  std::uint64_t diag_oracle_count = 0;
  double primal = std::numeric_limits<double>::quiet_NaN();
  double res_x = 0.0;
  double res_y = 0.0;
  double err_x = std::numeric_limits<double>::quiet_NaN();
  double err_y = std::numeric_limits<double>::quiet_NaN();
  double phi = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0.0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
  std::vector<TraceRecord> trace;
  Vec x_final, y_final, z_final;
  Vec x_best, y_best;
  std::uint64_t best_t = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  OracleCounters counters;
  std::uint64_t heads = 0, tails = 0, snapshot_refreshes = 0;
  std::uint64_t expected_oracle_count = 0;  // analytic formula
  std::uint64_t box_touch_count = 0;        // iterates that hit a Box bound
  double wall_seconds = 0.0;
};

// Diagnostics hooks evaluated at trace records; both optional. The
// potential hook gets mutable access so its inner-oracle work lands on the
// run's diagnostic counter.
struct RunHooks {
  std::function<double(class SolverLoop&)> potential;
  std::function<double(ConstView y)> accuracy;
};

// Stepwise solver. One iteration is estimator_update() followed by
// gda_step(); the split exists so verification code can fan out replicas
// between the two phases. A loop is copyable; replicas reseed their stream.
class SolverLoop {
 public:
  SolverLoop(const MinimaxProblem& problem, const SolverConfig& config);

  void estimator_update();
  void gda_step();
  void iterate();

  std::uint64_t t() const { return t_; }
  const Vec& x() const { return x_; }
  const Vec& y() const { return y_; }
  const Vec& z() const { return z_; }
  const EstimatorState& est() const { return est_; }
  EstimatorState& est() { return est_; }
  const SolverConfig& config() const { return cfg_; }
  const MinimaxProblem& problem() const { return *problem_; }
  RegularizedOracle& oracle() { return oracle_; }
  const RegularizedOracle& oracle() const { return oracle_; }
  double lipschitz() const { return lipschitz_; }
  double lambda() const { return lambda_; }
  std::uint64_t heads() const { return heads_; }
  std::uint64_t tails() const { return tails_; }
  std::uint64_t snapshot_refreshes() const { return refreshes_; }
  std::uint64_t box_touch_count() const { return box_touches_; }
  std::uint64_t expected_oracle_count() const;

  void reseed(std::uint64_t master_seed, std::uint64_t run_id);

 private:
  void draw_batch(std::vector<std::uint32_t>& out);
  void step_x_y();
  void check_box_touch();

  const MinimaxProblem* problem_;
  SolverConfig cfg_;
  RegularizedOracle oracle_;
  EstimatorState est_;
  RngStream rng_;
  Vec x_, y_, z_, x_next_, y_next_, step_buf_;
  std::vector<std::uint32_t> batch_, batch2_;
  double lipschitz_ = 0.0;
  double lambda_ = 0.0;
  std::size_t snapshot_period_ = 0;
  std::uint64_t t_ = 0;
  std::uint64_t heads_ = 0, tails_ = 0, refreshes_ = 0;
  std::uint64_t box_touches_ = 0;
  bool estimator_ready_ = false;
  bool warm_done_ = false;
};

// Exact-gradient game-stationarity residuals (Euclidean projected-gradient
// surrogate for the distance to the normal cones); costs 2n on the
// diagnostic lane.
std::pair<double, double> game_residuals(const MinimaxProblem& problem,
                                         ConstView x, ConstView y, double eta,
                                         OracleCounters* diag = nullptr);

// Drives a SolverLoop for T iterations with tracing, best-iterate
// selection, and oracle accounting.
RunResult run_solver(const MinimaxProblem& problem, const SolverConfig& config,
                     const RunHooks& hooks = {});

// Named entry points; each validates the scheme tag.
RunResult run_pvr_sgda(const MinimaxProblem&, const SolverConfig&,
                       const RunHooks& = {});
RunResult run_zerosarah_sgda(const MinimaxProblem&, const SolverConfig&,
                             const RunHooks& = {});
RunResult run_stocgda(const MinimaxProblem&, const SolverConfig&,
                      const RunHooks& = {});
RunResult run_vr_agda(const MinimaxProblem&, const SolverConfig&,
                      const RunHooks& = {});

}  // namespace ncc

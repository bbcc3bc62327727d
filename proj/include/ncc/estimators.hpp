#pragma once

// Stochastic gradient estimators of the regularized function
//   K(x,z;y) = f(x,y) + (r/2)||x - z||^2.
// Four flavors: probabilistic variance reduction (full gradient with
// probability p, recursive difference otherwise), ZeroSARAH (recursive
// difference plus per-component gradient trackers, no full gradients),
// SVRG (snapshot-based), and plain minibatch.
//
// Every component-gradient evaluation of one block (x or y) increments the
// oracle counter by one; that unit is what all efficiency curves use.
// Diagnostics accrue to a separate lane.

#include <cstdint>
#include <span>

#include "ncc/problems.hpp"
#include "ncc/rng.hpp"
#include "ncc/vec.hpp"

namespace ncc {

struct OracleCounters {
  std::uint64_t algo = 0;
  std::uint64_t diag = 0;
};

enum class Lane { Algo, Diag };

class RegularizedOracle {
 public:
  RegularizedOracle(const MinimaxProblem& problem, double r)
      : problem_(&problem), r_(r) {}

  const MinimaxProblem& problem() const { return *problem_; }
  double r() const { return r_; }
  OracleCounters& counters() { return counters_; }
  const OracleCounters& counters() const { return counters_; }

  double k_value(ConstView x, ConstView z, ConstView y) const;

  // Component gradients of K; the x-part carries the full r(x - z) term so
  // the mean over components is preserved.
  void comp_grad_x(std::size_t i, ConstView x, ConstView z, ConstView y,
                   View out, Lane lane);
  void comp_grad_y(std::size_t i, ConstView x, ConstView y, View out, Lane lane);

  // Batch means over an index set.
  void batch_grad_x(std::span<const std::uint32_t> batch, ConstView x,
                    ConstView z, ConstView y, View out, Lane lane);
  void batch_grad_y(std::span<const std::uint32_t> batch, ConstView x,
                    ConstView y, View out, Lane lane);

  // Full gradients of K (cost n per block).
  void full_grad_x(ConstView x, ConstView z, ConstView y, View out, Lane lane);
  void full_grad_y(ConstView x, ConstView y, View out, Lane lane);

  // Raw gradients of f, used by stationarity diagnostics.
  void grad_f_x(ConstView x, ConstView y, View out, Lane lane);
  void grad_f_y(ConstView x, ConstView y, View out, Lane lane);

 private:
  void add_reg(ConstView x, ConstView z, View out) const;
  std::uint64_t& lane(Lane l) {
    return l == Lane::Algo ? counters_.algo : counters_.diag;
  }

  const MinimaxProblem* problem_;
  double r_;
  OracleCounters counters_;
};

// ---------------------------------------------------------------------------

struct EstimatorState {
  Vec v, w;                       // current estimators of grad_x K, grad_y K
  Vec prev_x, prev_y, prev_z;     // point used by the recursive branches
  bool has_prev = false;

  // ZeroSARAH trackers, flat n x dim storage, plus incrementally maintained
  // sums. tracker_mean_x() returns (1/n) sum_i d_i.
  Vec d_flat, h_flat;
  Vec d_sum, h_sum;
  std::uint64_t resum_counter = 0;

  // SVRG snapshot
  Vec snap_x, snap_y, snap_z;
  Vec snap_gx, snap_gy;
  bool has_snapshot = false;

  // batch bookkeeping (exposed for diagnostics)
  std::vector<std::uint32_t> last_batch;

  // scratch
  Vec buf_xa, buf_xb, buf_ya, buf_yb, acc_x, acc_y;
  std::vector<std::uint32_t> batch_scratch, sample_scratch;

  void init(std::size_t n, std::size_t dim_x, std::size_t dim_y,
            bool trackers, bool snapshot);
  void set_prev(ConstView x, ConstView y, ConstView z);
  void tracker_mean_x(View out) const;
  void tracker_mean_y(View out) const;
  // Recompute the tracker sums exactly (kills float drift). Returns the
  // relative drift that was present.
  double resum_trackers();
};

// PVR update (forced-heads at t=0 is the caller's responsibility): heads
// takes exact full gradients, tails applies the recursive difference using
// the same batch at both time points. Updates prev to the current point.
void pvr_update(EstimatorState& st, RegularizedOracle& oracle, bool heads,
                std::span<const std::uint32_t> batch_x,
                std::span<const std::uint32_t> batch_y, ConstView x,
                ConstView z, ConstView y);

// One full pass that warm-starts v, w and all trackers with the exact
// gradients at the initial point (cost 2n). This is the default
// initialization; the zero-initialized variant just skips this call.
void zerosarah_warm_init(EstimatorState& st, RegularizedOracle& oracle,
                         ConstView x, ConstView z, ConstView y);

// ZeroSARAH recursive update with tracker refresh on the sampled batch.
// Cost is exactly 2b x-partials + 2b y-partials; the tracker refresh
// reuses the current-point batch gradients.
void zerosarah_update(EstimatorState& st, RegularizedOracle& oracle,
                      std::span<const std::uint32_t> batch, double lambda,
                      ConstView x, ConstView z, ConstView y,
                      std::uint64_t resum_period);

// SVRG estimator (VR-AGDA baseline): v = batch(point) - batch(snapshot) +
// full(snapshot), shared batch. Block-separate variants support the
// alternating update order.
void svrg_refresh(EstimatorState& st, RegularizedOracle& oracle, ConstView x,
                  ConstView z, ConstView y);
void svrg_update_x(EstimatorState& st, RegularizedOracle& oracle,
                   std::span<const std::uint32_t> batch, ConstView x,
                   ConstView z, ConstView y);
void svrg_update_y(EstimatorState& st, RegularizedOracle& oracle,
                   std::span<const std::uint32_t> batch, ConstView x,
                   ConstView y);
void svrg_update(EstimatorState& st, RegularizedOracle& oracle,
                 std::span<const std::uint32_t> batch, ConstView x, ConstView z,
                 ConstView y);

// Plain batch-mean gradients (StocGDA).
void minibatch_update(EstimatorState& st, RegularizedOracle& oracle,
                      std::span<const std::uint32_t> batch_x,
                      std::span<const std::uint32_t> batch_y, ConstView x,
                      ConstView z, ConstView y);

// Analytic oracle-count formulas, cross-checked against the live counters.
std::uint64_t pvr_expected_count(std::size_t n, std::size_t batch,
                                 std::uint64_t heads, std::uint64_t tails);
std::uint64_t zerosarah_expected_count(std::size_t n, std::size_t batch,
                                       std::uint64_t iterations, bool warm_init);
std::uint64_t stocgda_expected_count(std::size_t batch, std::uint64_t iterations);
std::uint64_t vragda_expected_count(std::size_t n, std::size_t batch,
                                    std::uint64_t iterations,
                                    std::uint64_t refreshes);

}  // namespace ncc

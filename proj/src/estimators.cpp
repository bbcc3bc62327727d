#include "ncc/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace ncc {

double RegularizedOracle::k_value(ConstView x, ConstView z, ConstView y) const {
  return problem_->value(x, y) + 0.5 * r_ * dist2sq(x, z);
}

void RegularizedOracle::add_reg(ConstView x, ConstView z, View out) const {
  if (r_ == 0.0) return;
  add_scaled_diff(r_, x, z, out);  // out += r (x - z)
}

void RegularizedOracle::comp_grad_x(std::size_t i, ConstView x, ConstView z,
                                    ConstView y, View out, Lane l) {
  problem_->comp_grad_x(i, x, y, out);
  add_reg(x, z, out);
  lane(l) += 1;
}

void RegularizedOracle::comp_grad_y(std::size_t i, ConstView x, ConstView y,
                                    View out, Lane l) {
  problem_->comp_grad_y(i, x, y, out);
  lane(l) += 1;
}

void RegularizedOracle::batch_grad_x(std::span<const std::uint32_t> batch,
                                     ConstView x, ConstView z, ConstView y,
                                     View out, Lane l) {
  if (batch.empty()) throw std::invalid_argument("batch_grad_x: empty batch");
  thread_local Vec buf;
  buf.resize(out.size());
  fill(out, 0.0);
  for (std::uint32_t i : batch) {
    problem_->comp_grad_x(i, x, y, buf);
    axpy(1.0, buf, out);
  }
  scale(1.0 / static_cast<double>(batch.size()), out);
  add_reg(x, z, out);
  lane(l) += batch.size();
}

void RegularizedOracle::batch_grad_y(std::span<const std::uint32_t> batch,
                                     ConstView x, ConstView y, View out,
                                     Lane l) {
  if (batch.empty()) throw std::invalid_argument("batch_grad_y: empty batch");
  thread_local Vec buf;
  buf.resize(out.size());
  fill(out, 0.0);
  for (std::uint32_t i : batch) {
    problem_->comp_grad_y(i, x, y, buf);
    axpy(1.0, buf, out);
  }
  scale(1.0 / static_cast<double>(batch.size()), out);
  lane(l) += batch.size();
}

void RegularizedOracle::full_grad_x(ConstView x, ConstView z, ConstView y,
                                    View out, Lane l) {
  problem_->grad_x(x, y, out);
  add_reg(x, z, out);
  lane(l) += problem_->components();
}

void RegularizedOracle::full_grad_y(ConstView x, ConstView y, View out, Lane l) {
  problem_->grad_y(x, y, out);
  lane(l) += problem_->components();
}

void RegularizedOracle::grad_f_x(ConstView x, ConstView y, View out, Lane l) {
  problem_->grad_x(x, y, out);
  lane(l) += problem_->components();
}

void RegularizedOracle::grad_f_y(ConstView x, ConstView y, View out, Lane l) {
  problem_->grad_y(x, y, out);
  lane(l) += problem_->components();
}

// ---------------------------------------------------------------------------

void EstimatorState::init(std::size_t n, std::size_t dim_x, std::size_t dim_y,
                          bool trackers, bool snapshot) {
  v.assign(dim_x, 0.0);
  w.assign(dim_y, 0.0);
  prev_x.assign(dim_x, 0.0);
  prev_y.assign(dim_y, 0.0);
  prev_z.assign(dim_x, 0.0);
  has_prev = false;
  if (trackers) {
    d_flat.assign(n * dim_x, 0.0);
    h_flat.assign(n * dim_y, 0.0);
    d_sum.assign(dim_x, 0.0);
    h_sum.assign(dim_y, 0.0);
  }
  if (snapshot) {
    snap_x.assign(dim_x, 0.0);
    snap_y.assign(dim_y, 0.0);
    snap_z.assign(dim_x, 0.0);
    snap_gx.assign(dim_x, 0.0);
    snap_gy.assign(dim_y, 0.0);
    has_snapshot = false;
  }
  buf_xa.assign(dim_x, 0.0);
  buf_xb.assign(dim_x, 0.0);
  buf_ya.assign(dim_y, 0.0);
  buf_yb.assign(dim_y, 0.0);
  acc_x.assign(dim_x, 0.0);
  acc_y.assign(dim_y, 0.0);
}

void EstimatorState::set_prev(ConstView x, ConstView y, ConstView z) {
  copy(x, prev_x);
  copy(y, prev_y);
  copy(z, prev_z);
  has_prev = true;
}

void EstimatorState::tracker_mean_x(View out) const {
  const double n = static_cast<double>(d_flat.size() / d_sum.size());
  copy(d_sum, out);
  scale(1.0 / n, out);
}

void EstimatorState::tracker_mean_y(View out) const {
  const double n = static_cast<double>(h_flat.size() / h_sum.size());
  copy(h_sum, out);
  scale(1.0 / n, out);
}

double EstimatorState::resum_trackers() {
  const std::size_t dx = d_sum.size();
  const std::size_t dy = h_sum.size();
  const std::size_t n = dx == 0 ? 0 : d_flat.size() / dx;
  Vec dsum(dx, 0.0), hsum(dy, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    axpy(1.0, ConstView(d_flat).subspan(i * dx, dx), dsum);
    axpy(1.0, ConstView(h_flat).subspan(i * dy, dy), hsum);
  }
  double drift = 0.0;
  const double scale_ref = std::max(1.0, std::max(nrm2(dsum), nrm2(hsum)));
  drift = std::max(dist2(dsum, d_sum), dist2(hsum, h_sum)) / scale_ref;
  d_sum = std::move(dsum);
  h_sum = std::move(hsum);
  resum_counter = 0;
  return drift;
}

// ---------------------------------------------------------------------------

void pvr_update(EstimatorState& st, RegularizedOracle& oracle, bool heads,
                std::span<const std::uint32_t> batch_x,
                std::span<const std::uint32_t> batch_y, ConstView x,
                ConstView z, ConstView y) {
  if (heads) {
    oracle.full_grad_x(x, z, y, st.v, Lane::Algo);
    oracle.full_grad_y(x, y, st.w, Lane::Algo);
  } else {
    if (!st.has_prev) {
      throw std::logic_error("pvr_update: tails branch requires a previous point");
    }
    // same batch at both time points; coupled or separate x/y batches are
    // the caller's choice
    oracle.batch_grad_x(batch_x, x, z, y, st.buf_xa, Lane::Algo);
    oracle.batch_grad_x(batch_x, st.prev_x, st.prev_z, st.prev_y, st.buf_xb,
                        Lane::Algo);
    add_scaled_diff(1.0, st.buf_xa, st.buf_xb, st.v);
    oracle.batch_grad_y(batch_y, x, y, st.buf_ya, Lane::Algo);
    oracle.batch_grad_y(batch_y, st.prev_x, st.prev_y, st.buf_yb, Lane::Algo);
    add_scaled_diff(1.0, st.buf_ya, st.buf_yb, st.w);
  }
  st.set_prev(x, y, z);
}

void zerosarah_warm_init(EstimatorState& st, RegularizedOracle& oracle,
                         ConstView x, ConstView z, ConstView y) {
  const std::size_t n = oracle.problem().components();
  const std::size_t dx = st.v.size();
  const std::size_t dy = st.w.size();
  fill(st.d_sum, 0.0);
  fill(st.h_sum, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    View di(st.d_flat.data() + i * dx, dx);
    View hi(st.h_flat.data() + i * dy, dy);
    oracle.comp_grad_x(i, x, z, y, di, Lane::Algo);
    oracle.comp_grad_y(i, x, y, hi, Lane::Algo);
    axpy(1.0, di, st.d_sum);
    axpy(1.0, hi, st.h_sum);
  }
  st.tracker_mean_x(st.v);
  st.tracker_mean_y(st.w);
  st.set_prev(x, y, z);
}

void zerosarah_update(EstimatorState& st, RegularizedOracle& oracle,
                      std::span<const std::uint32_t> batch, double lambda,
                      ConstView x, ConstView z, ConstView y,
                      std::uint64_t resum_period) {
  if (batch.empty()) throw std::invalid_argument("zerosarah_update: empty batch");
  const std::size_t n = oracle.problem().components();
  if (batch.size() > n) throw std::invalid_argument("zerosarah_update: b > n");
  if (!st.has_prev) {
    throw std::logic_error("zerosarah_update: previous point missing");
  }
  const std::size_t dx = st.v.size();
  const std::size_t dy = st.w.size();
  const double b = static_cast<double>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(n);

  // v <- (1-lambda) v + lambda * mean(d); the tracker sums are snapshotted
  // before any refresh below.
  scale(1.0 - lambda, View(st.v));
  axpy(lambda * inv_n, st.d_sum, st.v);
  scale(1.0 - lambda, View(st.w));
  axpy(lambda * inv_n, st.h_sum, st.w);

  fill(st.acc_x, 0.0);
  fill(st.acc_y, 0.0);
  for (std::uint32_t i : batch) {
    View di(st.d_flat.data() + static_cast<std::size_t>(i) * dx, dx);
    View hi(st.h_flat.data() + static_cast<std::size_t>(i) * dy, dy);
    oracle.comp_grad_x(i, x, z, y, st.buf_xa, Lane::Algo);
    oracle.comp_grad_x(i, st.prev_x, st.prev_z, st.prev_y, st.buf_xb, Lane::Algo);
    // acc += g_t - (1-lambda) g_{t-1} - lambda d_i
    axpy(1.0, st.buf_xa, st.acc_x);
    axpy(-(1.0 - lambda), st.buf_xb, st.acc_x);
    axpy(-lambda, di, st.acc_x);
    // tracker refresh reuses the current-point gradient
    add_scaled_diff(1.0, st.buf_xa, di, st.d_sum);
    copy(st.buf_xa, di);

    oracle.comp_grad_y(i, x, y, st.buf_ya, Lane::Algo);
    oracle.comp_grad_y(i, st.prev_x, st.prev_y, st.buf_yb, Lane::Algo);
    axpy(1.0, st.buf_ya, st.acc_y);
    axpy(-(1.0 - lambda), st.buf_yb, st.acc_y);
    axpy(-lambda, hi, st.acc_y);
    add_scaled_diff(1.0, st.buf_ya, hi, st.h_sum);
    copy(st.buf_ya, hi);
  }
  axpy(1.0 / b, st.acc_x, st.v);
  axpy(1.0 / b, st.acc_y, st.w);

  st.last_batch.assign(batch.begin(), batch.end());
  st.set_prev(x, y, z);
  if (resum_period > 0 && ++st.resum_counter >= resum_period) {
    st.resum_trackers();
  }
}

void svrg_refresh(EstimatorState& st, RegularizedOracle& oracle, ConstView x,
                  ConstView z, ConstView y) {
  copy(x, st.snap_x);
  copy(y, st.snap_y);
  copy(z, st.snap_z);
  oracle.full_grad_x(x, z, y, st.snap_gx, Lane::Algo);
  oracle.full_grad_y(x, y, st.snap_gy, Lane::Algo);
  st.has_snapshot = true;
}

void svrg_update_x(EstimatorState& st, RegularizedOracle& oracle,
                   std::span<const std::uint32_t> batch, ConstView x,
                   ConstView z, ConstView y) {
  if (!st.has_snapshot) throw std::logic_error("svrg_update_x: snapshot missing");
  oracle.batch_grad_x(batch, x, z, y, st.buf_xa, Lane::Algo);
  oracle.batch_grad_x(batch, st.snap_x, st.snap_z, st.snap_y, st.buf_xb,
                      Lane::Algo);
  copy(st.snap_gx, st.v);
  add_scaled_diff(1.0, st.buf_xa, st.buf_xb, st.v);
}

void svrg_update_y(EstimatorState& st, RegularizedOracle& oracle,
                   std::span<const std::uint32_t> batch, ConstView x,
                   ConstView y) {
  if (!st.has_snapshot) throw std::logic_error("svrg_update_y: snapshot missing");
  oracle.batch_grad_y(batch, x, y, st.buf_ya, Lane::Algo);
  oracle.batch_grad_y(batch, st.snap_x, st.snap_y, st.buf_yb, Lane::Algo);
  copy(st.snap_gy, st.w);
  add_scaled_diff(1.0, st.buf_ya, st.buf_yb, st.w);
}

void svrg_update(EstimatorState& st, RegularizedOracle& oracle,
                 std::span<const std::uint32_t> batch, ConstView x, ConstView z,
                 ConstView y) {
  svrg_update_x(st, oracle, batch, x, z, y);
  svrg_update_y(st, oracle, batch, x, y);
}

void minibatch_update(EstimatorState& st, RegularizedOracle& oracle,
                      std::span<const std::uint32_t> batch_x,
                      std::span<const std::uint32_t> batch_y, ConstView x,
                      ConstView z, ConstView y) {
  oracle.batch_grad_x(batch_x, x, z, y, st.v, Lane::Algo);
  oracle.batch_grad_y(batch_y, x, y, st.w, Lane::Algo);
  st.set_prev(x, y, z);
}

// ---------------------------------------------------------------------------

std::uint64_t pvr_expected_count(std::size_t n, std::size_t batch,
                                 std::uint64_t heads, std::uint64_t tails) {
  return heads * 2 * n + tails * 4 * batch;
}

std::uint64_t zerosarah_expected_count(std::size_t n, std::size_t batch,
                                       std::uint64_t iterations, bool warm_init) {
  return (warm_init ? 2 * n : 0) + 4 * batch * iterations;
}

std::uint64_t stocgda_expected_count(std::size_t batch, std::uint64_t iterations) {
  return 2 * batch * iterations;
}

std::uint64_t vragda_expected_count(std::size_t n, std::size_t batch,
                                    std::uint64_t iterations,
                                    std::uint64_t refreshes) {
  return refreshes * 2 * n + iterations * 4 * batch;
}

}  // namespace ncc

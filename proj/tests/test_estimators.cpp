#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ncc/estimators.hpp"
#include "test_helpers.hpp"

using namespace ncc;
using ncc::testing::random_point_in;

namespace {

ToyBilinearProblem make_toy(std::size_t n = 12, std::uint64_t seed = 3) {
  ToyBilinearProblem::Params params;
  params.dim_x = 4;
  params.dim_y = 3;
  params.n = n;
  params.noise = 0.4;
  params.seed = seed;
  return ToyBilinearProblem::random(params);
}

std::vector<std::uint32_t> all_indices(std::size_t n) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

struct Point {
  Vec x, y, z;
};

Point random_state(const MinimaxProblem& prob, RngStream& rng) {
  Point pt;
  pt.x = random_point_in(prob.set_x(), rng);
  pt.y = random_point_in(prob.set_y(), rng);
  pt.z = random_point_in(prob.set_x(), rng);
  return pt;
}

}  // namespace

TEST_CASE("regularized batch gradients") {
  ToyBilinearProblem toy = make_toy();
  const double r = 2.0;
  RegularizedOracle oracle(toy, r);
  RngStream rng(3, 1);
  Point pt = random_state(toy, rng);

  Vec full(toy.dim_x()), batch_mean(toy.dim_x());
  oracle.full_grad_x(pt.x, pt.z, pt.y, full, Lane::Algo);
  auto idx = all_indices(toy.components());
  oracle.batch_grad_x(idx, pt.x, pt.z, pt.y, batch_mean, Lane::Algo);
  CHECK(dist2(full, batch_mean) <= 1e-12 * (1.0 + nrm2(full)));

  // x = z: the regularizer term vanishes
  Vec gf(toy.dim_x()), gk(toy.dim_x());
  toy.grad_x(pt.x, pt.y, gf);
  oracle.full_grad_x(pt.x, pt.x, pt.y, gk, Lane::Algo);
  CHECK(dist2(gf, gk) == 0.0);

  // pure regularizer: zero-matrix problem with x - z = e_1
  ToyBilinearProblem zero =
      ToyBilinearProblem::from_matrix(Vec(4 * 3, 0.0), 4, 3, 5, 1e-9, 10.0);
  RegularizedOracle zoracle(zero, 2.0);
  Vec x(4, 0.0), z(4, 0.0), y(3, 1.0 / 3.0), out(4);
  x[0] = 1.0;
  // comp gradients carry -c x with tiny c; compare against r(x-z) - c x
  zoracle.comp_grad_x(0, x, z, y, out, Lane::Algo);
  CHECK(out[0] == doctest::Approx(2.0 * 1.0 - 1e-9));
  CHECK(out[1] == doctest::Approx(0.0));

  CHECK_THROWS_AS(
      oracle.batch_grad_x({}, pt.x, pt.z, pt.y, batch_mean, Lane::Algo),
      std::invalid_argument);
}

TEST_CASE("oracle counters: x and y partials counted separately") {
  ToyBilinearProblem toy = make_toy();
  RegularizedOracle oracle(toy, 2.0);
  RngStream rng(5, 2);
  Point pt = random_state(toy, rng);
  Vec gx(toy.dim_x()), gy(toy.dim_y());
  oracle.full_grad_x(pt.x, pt.z, pt.y, gx, Lane::Algo);
  CHECK(oracle.counters().algo == toy.components());
  oracle.full_grad_y(pt.x, pt.y, gy, Lane::Algo);
  CHECK(oracle.counters().algo == 2 * toy.components());
  std::vector<std::uint32_t> batch = {1, 3, 5};
  oracle.batch_grad_y(batch, pt.x, pt.y, gy, Lane::Algo);
  CHECK(oracle.counters().algo == 2 * toy.components() + 3);
  oracle.comp_grad_x(0, pt.x, pt.z, pt.y, gx, Lane::Diag);
  CHECK(oracle.counters().diag == 1);
}

TEST_CASE("pvr heads takes exact full gradients; tails telescopes") {
  ToyBilinearProblem toy = make_toy();
  RegularizedOracle oracle(toy, 2.0);
  EstimatorState st;
  st.init(toy.components(), toy.dim_x(), toy.dim_y(), false, false);
  RngStream rng(7, 3);
  Point pt = random_state(toy, rng);

  pvr_update(st, oracle, true, {}, {}, pt.x, pt.z, pt.y);
  Vec gx(toy.dim_x()), gy(toy.dim_y());
  oracle.full_grad_x(pt.x, pt.z, pt.y, gx, Lane::Diag);
  oracle.full_grad_y(pt.x, pt.y, gy, Lane::Diag);
  CHECK(dist2(st.v, gx) == 0.0);
  CHECK(dist2(st.w, gy) == 0.0);

  // same point on the tails branch: the difference vanishes exactly
  Vec v_before = st.v, w_before = st.w;
  std::vector<std::uint32_t> batch = {0, 2};
  pvr_update(st, oracle, false, batch, batch, pt.x, pt.z, pt.y);
  CHECK(st.v == v_before);
  CHECK(st.w == w_before);
}

TEST_CASE("pvr tails requires a previous point") {
  ToyBilinearProblem toy = make_toy();
  RegularizedOracle oracle(toy, 2.0);
  EstimatorState st;
  st.init(toy.components(), toy.dim_x(), toy.dim_y(), false, false);
  RngStream rng(9, 4);
  Point pt = random_state(toy, rng);
  std::vector<std::uint32_t> batch = {0};
  CHECK_THROWS_AS(pvr_update(st, oracle, false, batch, batch, pt.x, pt.z, pt.y),
                  std::logic_error);
}

TEST_CASE("pvr conditional expectation matches the mixture formula") {
  ToyBilinearProblem toy = make_toy(10, 5);
  const double r = 2.0, p = 0.35;
  RngStream rng(11, 5);
  Point pt_prev, pt;
  pt_prev = random_state(toy, rng);
  pt = random_state(toy, rng);

  // fixed v_{t-1}
  Vec v_prev(toy.dim_x());
  for (auto& a : v_prev) a = rng.normal();

  // expected value: p grad K_t + (1-p)(v_{t-1} + grad K_t - grad K_{t-1})
  RegularizedOracle ex_oracle(toy, r);
  Vec gk_t(toy.dim_x()), gk_prev(toy.dim_x());
  ex_oracle.full_grad_x(pt.x, pt.z, pt.y, gk_t, Lane::Diag);
  ex_oracle.full_grad_x(pt_prev.x, pt_prev.z, pt_prev.y, gk_prev, Lane::Diag);
  Vec expected(toy.dim_x());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    expected[k] = p * gk_t[k] + (1.0 - p) * (v_prev[k] + gk_t[k] - gk_prev[k]);
  }

  const int draws = 100000;
  Vec mean(toy.dim_x(), 0.0);
  std::vector<double> sumsq(toy.dim_x(), 0.0);
  std::vector<std::uint32_t> batch, scratch;
  RegularizedOracle oracle(toy, r);
  EstimatorState st;
  st.init(toy.components(), toy.dim_x(), toy.dim_y(), false, false);
  for (int m = 0; m < draws; ++m) {
    st.v = v_prev;
    fill(st.w, 0.0);
    st.set_prev(pt_prev.x, pt_prev.y, pt_prev.z);
    const bool heads = rng.bernoulli(p);
    if (heads) {
      pvr_update(st, oracle, true, {}, {}, pt.x, pt.z, pt.y);
    } else {
      rng.sample_without_replacement(toy.components(), 2, batch, scratch);
      pvr_update(st, oracle, false, batch, batch, pt.x, pt.z, pt.y);
    }
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] += st.v[k];
      sumsq[k] += st.v[k] * st.v[k];
    }
  }
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double mk = mean[k] / draws;
    const double var = sumsq[k] / draws - mk * mk;
    const double se = std::sqrt(std::max(var, 1e-30) / draws);
    CHECK(std::abs(mk - expected[k]) <= 3.0 * se + 1e-10);
  }
}

TEST_CASE("zerosarah warm init yields exact gradients") {
  ToyBilinearProblem toy = make_toy();
  RegularizedOracle oracle(toy, 2.0);
  EstimatorState st;
  st.init(toy.components(), toy.dim_x(), toy.dim_y(), true, false);
  RngStream rng(13, 6);
  Point pt = random_state(toy, rng);
  zerosarah_warm_init(st, oracle, pt.x, pt.z, pt.y);
  Vec gx(toy.dim_x()), gy(toy.dim_y());
  oracle.full_grad_x(pt.x, pt.z, pt.y, gx, Lane::Diag);
  oracle.full_grad_y(pt.x, pt.y, gy, Lane::Diag);
  CHECK(dist2(st.v, gx) <= 1e-14 * (1.0 + nrm2(gx)));
  CHECK(dist2(st.w, gy) <= 1e-14 * (1.0 + nrm2(gy)));
  // cost: one pass over both blocks
  CHECK(oracle.counters().algo == 2 * toy.components());
}

TEST_CASE("zerosarah full-batch update is exact when the previous estimate is") {
  ToyBilinearProblem toy = make_toy();
  const std::size_t n = toy.components();
  RegularizedOracle oracle(toy, 2.0);
  EstimatorState st;
  st.init(n, toy.dim_x(), toy.dim_y(), true, false);
  RngStream rng(17, 7);
  Point p0 = random_state(toy, rng);
  zerosarah_warm_init(st, oracle, p0.x, p0.z, p0.y);
  Point p1 = random_state(toy, rng);
  zerosarah_update(st, oracle, all_indices(n), 1.0 / static_cast<double>(n),
                   p1.x, p1.z, p1.y, 0);
  Vec gx(toy.dim_x());
  oracle.full_grad_x(p1.x, p1.z, p1.y, gx, Lane::Diag);
  CHECK(dist2(st.v, gx) <= 1e-10 * (1.0 + nrm2(gx)));
}

TEST_CASE("zerosarah with lambda 0 and a frozen point keeps the estimator") {
  ToyBilinearProblem toy = make_toy();
  RegularizedOracle oracle(toy, 2.0);
  EstimatorState st;
  st.init(toy.components(), toy.dim_x(), toy.dim_y(), true, false);
  RngStream rng(19, 8);
  Point pt = random_state(toy, rng);
  zerosarah_warm_init(st, oracle, pt.x, pt.z, pt.y);
  Vec v_before = st.v, w_before = st.w;
  std::vector<std::uint32_t> batch = {0, 1, 4};
  zerosarah_update(st, oracle, batch, 0.0, pt.x, pt.z, pt.y, 0);
  CHECK(dist2(st.v, v_before) <= 1e-14);
  CHECK(dist2(st.w, w_before) <= 1e-14);
}

TEST_CASE("zerosarah batch larger than n throws") {
  ToyBilinearProblem toy = make_toy(4);
  RegularizedOracle oracle(toy, 2.0);
  EstimatorState st;
  st.init(4, toy.dim_x(), toy.dim_y(), true, false);
  RngStream rng(23, 9);
  Point pt = random_state(toy, rng);
  st.set_prev(pt.x, pt.y, pt.z);
  std::vector<std::uint32_t> batch = {0, 1, 2, 3, 0};
  CHECK_THROWS_AS(zerosarah_update(st, oracle, batch, 0.2, pt.x, pt.z, pt.y, 0),
                  std::invalid_argument);
}

TEST_CASE("tracker sums: incremental drift stays below 1e-9 over 1e4 updates") {
  ToyBilinearProblem toy = make_toy(30, 8);
  RegularizedOracle oracle(toy, 2.0);
  EstimatorState st;
  st.init(toy.components(), toy.dim_x(), toy.dim_y(), true, false);
  RngStream rng(29, 10);
  Point pt = random_state(toy, rng);
  zerosarah_warm_init(st, oracle, pt.x, pt.z, pt.y);
  std::vector<std::uint32_t> batch, scratch;
  for (int iter = 0; iter < 10000; ++iter) {
    Point q = random_state(toy, rng);
    rng.sample_without_replacement(toy.components(), 5, batch, scratch);
    zerosarah_update(st, oracle, batch, 0.2, q.x, q.z, q.y, 0);  // resum off
  }
  const double drift = st.resum_trackers();
  CHECK(drift <= 1e-9);
}

TEST_CASE("svrg estimator identities") {
  ToyBilinearProblem toy = make_toy();
  RegularizedOracle oracle(toy, 0.0);
  EstimatorState st;
  st.init(toy.components(), toy.dim_x(), toy.dim_y(), false, true);
  RngStream rng(31, 11);
  Point snap = random_state(toy, rng);
  svrg_refresh(st, oracle, snap.x, snap.z, snap.y);

  // point == snapshot: estimator equals the snapshot full gradient
  std::vector<std::uint32_t> batch = {0, 3};
  svrg_update(st, oracle, batch, snap.x, snap.z, snap.y);
  CHECK(dist2(st.v, st.snap_gx) == 0.0);
  CHECK(dist2(st.w, st.snap_gy) == 0.0);

  // full batch: estimator equals the exact gradient at the point
  Point pt = random_state(toy, rng);
  svrg_update(st, oracle, all_indices(toy.components()), pt.x, pt.z, pt.y);
  Vec gx(toy.dim_x());
  oracle.full_grad_x(pt.x, pt.z, pt.y, gx, Lane::Diag);
  CHECK(dist2(st.v, gx) <= 1e-12 * (1.0 + nrm2(gx)));

  // Monte-Carlo unbiasedness of the x-part
  Vec mean(toy.dim_x(), 0.0);
  std::vector<double> sumsq(toy.dim_x(), 0.0);
  std::vector<std::uint32_t> b2, scratch;
  const int draws = 100000;
  for (int m = 0; m < draws; ++m) {
    rng.sample_without_replacement(toy.components(), 3, b2, scratch);
    svrg_update_x(st, oracle, b2, pt.x, pt.z, pt.y);
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] += st.v[k];
      sumsq[k] += st.v[k] * st.v[k];
    }
  }
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double mk = mean[k] / draws;
    const double var = sumsq[k] / draws - mk * mk;
    const double se = std::sqrt(std::max(var, 1e-30) / draws);
    CHECK(std::abs(mk - gx[k]) <= 3.0 * se + 1e-10);
  }
}

TEST_CASE("minibatch estimator: full batch and singletons") {
  ToyBilinearProblem toy = make_toy();
  RegularizedOracle oracle(toy, 0.0);
  EstimatorState st;
  st.init(toy.components(), toy.dim_x(), toy.dim_y(), false, false);
  RngStream rng(37, 12);
  Point pt = random_state(toy, rng);
  auto idx = all_indices(toy.components());
  minibatch_update(st, oracle, idx, idx, pt.x, pt.z, pt.y);
  Vec gx(toy.dim_x());
  toy.grad_x(pt.x, pt.y, gx);
  CHECK(dist2(st.v, gx) <= 1e-13 * (1.0 + nrm2(gx)));

  std::vector<std::uint32_t> single = {4};
  minibatch_update(st, oracle, single, single, pt.x, pt.z, pt.y);
  Vec g4(toy.dim_x());
  toy.comp_grad_x(4, pt.x, pt.y, g4);
  CHECK(dist2(st.v, g4) == 0.0);
}

TEST_CASE("analytic oracle-count formulas") {
  CHECK(pvr_expected_count(100, 4, 3, 7) == 3 * 200 + 7 * 16);
  CHECK(zerosarah_expected_count(100, 20, 50, false) == 4 * 20 * 50);
  CHECK(zerosarah_expected_count(100, 20, 50, true) == 200 + 4 * 20 * 50);
  CHECK(stocgda_expected_count(8, 25) == 400);
  CHECK(vragda_expected_count(60, 5, 30, 3) == 3 * 120 + 30 * 20);
}

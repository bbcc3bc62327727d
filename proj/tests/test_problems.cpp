#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ncc/problems.hpp"
#include "test_helpers.hpp"

using namespace ncc;
using ncc::testing::fd_gradient_error;
using ncc::testing::random_point_in;

namespace {

ToyBilinearProblem identity_toy(std::size_t n = 4) {
  // A = I_2, c = 1
  return ToyBilinearProblem::from_matrix(Vec{1.0, 0.0, 0.0, 1.0}, 2, 2, n, 1.0,
                                         2.0);
}

RobustLogisticProblem tiny_logistic() {
  std::istringstream in("+1 1:1\n");
  RobustLogisticProblem::Options opts;
  opts.lambda2 = 0.0;
  return RobustLogisticProblem(parse_libsvm(in), opts);
}

RobustLogisticProblem synthetic_logistic(std::size_t n, std::size_t d,
                                         std::uint64_t seed,
                                         bool lambda1 = false) {
  RngStream rng(seed, fnv1a("synthetic-logistic"));
  Dataset ds;
  ds.n = n;
  ds.d = d;
  ds.row_ptr.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (rng.uniform() < 0.4) {
        ds.col.push_back(static_cast<std::uint32_t>(j));
        ds.val.push_back(2.0 * rng.uniform() - 1.0);
      }
    }
    if (ds.row_ptr.back() == ds.col.size()) {
      // keep rows nonempty
      ds.col.push_back(0);
      ds.val.push_back(1.0);
    }
    ds.labels.push_back(rng.uniform() < 0.5 ? -1 : 1);
    ds.row_ptr.push_back(ds.col.size());
  }
  RobustLogisticProblem::Options opts;
  opts.lambda1_enabled = lambda1;
  return RobustLogisticProblem(std::move(ds), opts);
}

PoisonProblem small_poison(std::uint64_t seed, PoisonData* out_pd = nullptr,
                           Dataset* out_test = nullptr) {
  PoisonData pd = gen_poison_data(seed, 200, 10);
  PoisonSplit sp = split_poison(pd.data, seed, 0.3, 0.1);
  if (out_pd) *out_pd = pd;
  if (out_test) *out_test = sp.test;
  PoisonProblem::Options opts;
  opts.epsilon = 2.0;
  opts.theta_bound = 50.0;
  return PoisonProblem(std::move(sp.tr1), std::move(sp.tr2), opts);
}

}  // namespace

TEST_CASE("toy bilinear values") {
  ToyBilinearProblem toy = identity_toy();
  CHECK(toy.value(Vec{0.0, 0.0}, Vec{0.5, 0.5}) == doctest::Approx(0.0));
  CHECK(toy.value(Vec{1.0, 0.0}, Vec{1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(*toy.exact_primal(Vec{1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(*toy.exact_primal(Vec{0.0, 0.0}) == doctest::Approx(0.0));
}

TEST_CASE("toy exact primal dominates f(x, y) over feasible y") {
  ToyBilinearProblem::Params params;
  params.dim_x = 4;
  params.dim_y = 3;
  params.n = 10;
  params.seed = 3;
  ToyBilinearProblem toy = ToyBilinearProblem::random(params);
  RngStream rng(5, 1);
  for (int cse = 0; cse < 1000; ++cse) {
    Vec x = random_point_in(toy.set_x(), rng);
    Vec y = random_point_in(toy.set_y(), rng);
    CHECK(*toy.exact_primal(x) >= toy.value(x, y) - 1e-9);
  }
}

TEST_CASE("logistic value and regularizer examples") {
  RobustLogisticProblem prob = tiny_logistic();
  CHECK(prob.value(Vec{0.0}, Vec{1.0}) == doctest::Approx(std::log(2.0)));

  // dg/dx at the origin vanishes (odd function)
  std::istringstream in("+1 1:1\n");
  RobustLogisticProblem::Options opts;
  opts.lambda2 = 0.001;
  opts.alpha = 10.0;
  RobustLogisticProblem prob2(parse_libsvm(in), opts);
  CHECK(prob2.regularizer_grad_coord(0.0) == 0.0);

  RobustLogisticProblem::Options opts3;
  opts3.lambda2 = 1.0;
  opts3.alpha = 1.0;
  std::istringstream in3("+1 1:1\n");
  RobustLogisticProblem prob3(parse_libsvm(in3), opts3);
  CHECK(prob3.regularizer_grad_coord(1.0) == doctest::Approx(0.5));
}

TEST_CASE("component gradients average to the full gradient") {
  RngStream rng(17, 1);
  auto check_mean = [&](const MinimaxProblem& prob) {
    Vec x = random_point_in(prob.set_x(), rng);
    Vec y = random_point_in(prob.set_y(), rng);
    Vec gx(prob.dim_x()), gy(prob.dim_y());
    prob.grad_x(x, y, gx);
    prob.grad_y(x, y, gy);
    Vec mx(prob.dim_x(), 0.0), my(prob.dim_y(), 0.0), buf_x(prob.dim_x()),
        buf_y(prob.dim_y());
    for (std::size_t i = 0; i < prob.components(); ++i) {
      prob.comp_grad_x(i, x, y, buf_x);
      axpy(1.0, buf_x, mx);
      prob.comp_grad_y(i, x, y, buf_y);
      axpy(1.0, buf_y, my);
    }
    scale(1.0 / static_cast<double>(prob.components()), View(mx));
    scale(1.0 / static_cast<double>(prob.components()), View(my));
    CHECK(dist2(gx, mx) <= 1e-12 * (1.0 + nrm2(gx)));
    CHECK(dist2(gy, my) <= 1e-12 * (1.0 + nrm2(gy)));
  };
  ToyBilinearProblem::Params params;
  params.dim_x = 5;
  params.dim_y = 4;
  params.n = 30;
  params.seed = 9;
  ToyBilinearProblem toy = ToyBilinearProblem::random(params);
  check_mean(toy);
  RobustLogisticProblem logi = synthetic_logistic(40, 8, 2);
  check_mean(logi);
  RobustLogisticProblem logi1 = synthetic_logistic(40, 8, 2, true);
  check_mean(logi1);
  PoisonProblem pois = small_poison(21);
  check_mean(pois);
}

TEST_CASE("finite differences confirm component gradients (200 points per problem)") {
  RngStream rng(31, 7);
  auto run_fd = [&](const MinimaxProblem& prob) {
    double max_err = 0.0;
    for (int cse = 0; cse < 200; ++cse) {
      Vec x = random_point_in(prob.set_x(), rng);
      Vec y = random_point_in(prob.set_y(), rng);
      const std::size_t i = rng.uniform_index(prob.components());
      max_err = std::max(max_err, fd_gradient_error(prob, i, x, y, rng));
    }
    return max_err;
  };
  ToyBilinearProblem::Params params;
  params.dim_x = 6;
  params.dim_y = 4;
  params.n = 25;
  params.seed = 13;
  ToyBilinearProblem toy = ToyBilinearProblem::random(params);
  CHECK(run_fd(toy) <= 1e-5);
  RobustLogisticProblem logi = synthetic_logistic(30, 10, 4);
  CHECK(run_fd(logi) <= 1e-5);
  RobustLogisticProblem logi1 = synthetic_logistic(30, 10, 4, true);
  CHECK(run_fd(logi1) <= 1e-5);
  PoisonProblem pois = small_poison(22);
  CHECK(run_fd(pois) <= 1e-5);
}

TEST_CASE("concavity in y holds at random midpoints") {
  RngStream rng(41, 3);
  auto check_concave = [&](const MinimaxProblem& prob) {
    for (int cse = 0; cse < 200; ++cse) {
      Vec x = random_point_in(prob.set_x(), rng);
      Vec y1 = random_point_in(prob.set_y(), rng);
      Vec y2 = random_point_in(prob.set_y(), rng);
      Vec mid(y1.size());
      saxpby(0.5, y1, 0.5, y2, mid);
      const double lhs = prob.value(x, mid);
      const double rhs = 0.5 * (prob.value(x, y1) + prob.value(x, y2));
      CHECK(lhs >= rhs - 1e-9);
    }
  };
  ToyBilinearProblem::Params params;
  params.dim_x = 4;
  params.dim_y = 4;
  params.n = 12;
  params.seed = 5;
  ToyBilinearProblem toy = ToyBilinearProblem::random(params);
  check_concave(toy);
  RobustLogisticProblem logi = synthetic_logistic(20, 6, 6);
  check_concave(logi);
  RobustLogisticProblem logi1 = synthetic_logistic(20, 6, 6, true);
  check_concave(logi1);
  PoisonProblem pois = small_poison(23);
  check_concave(pois);
}

TEST_CASE("empirical gradient variation stays below the smoothness estimate") {
  RngStream rng(53, 9);
  // The toy estimate is a joint constant over both blocks and every
  // component.
  {
    ToyBilinearProblem::Params params;
    params.dim_x = 5;
    params.dim_y = 3;
    params.n = 15;
    params.seed = 7;
    ToyBilinearProblem toy = ToyBilinearProblem::random(params);
    const double L = toy.lipschitz_estimate();
    Vec g1x(5), g1y(3), g2x(5), g2y(3);
    for (int cse = 0; cse < 1000; ++cse) {
      Vec x1 = random_point_in(toy.set_x(), rng);
      Vec y1 = random_point_in(toy.set_y(), rng);
      Vec x2 = random_point_in(toy.set_x(), rng);
      Vec y2 = random_point_in(toy.set_y(), rng);
      const std::size_t i = rng.uniform_index(toy.components());
      toy.comp_grad_x(i, x1, y1, g1x);
      toy.comp_grad_y(i, x1, y1, g1y);
      toy.comp_grad_x(i, x2, y2, g2x);
      toy.comp_grad_y(i, x2, y2, g2y);
      const double denom = dist2(x1, x2) + dist2(y1, y2);
      if (denom < 1e-9) continue;
      CHECK(dist2(g1x, g2x) / denom <= L * (1.0 + 1e-9));
      CHECK(dist2(g1y, g2y) / denom <= L * (1.0 + 1e-9));
    }
  }
  // The logistic estimate is the primal-curvature constant behind the
  // r > L requirement; check it against x-variation at a shared y.
  {
    RobustLogisticProblem logi = synthetic_logistic(25, 8, 8);
    const double L = logi.lipschitz_estimate();
    Vec g1x(8), g2x(8);
    for (int cse = 0; cse < 1000; ++cse) {
      Vec x1 = random_point_in(logi.set_x(), rng);
      Vec x2 = random_point_in(logi.set_x(), rng);
      Vec y = random_point_in(logi.set_y(), rng);
      logi.grad_x(x1, y, g1x);
      logi.grad_x(x2, y, g2x);
      const double denom = dist2(x1, x2);
      if (denom < 1e-9) continue;
      CHECK(dist2(g1x, g2x) / denom <= L * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("uniformly sampled component gradients are unbiased (Monte Carlo)") {
  ToyBilinearProblem::Params params;
  params.dim_x = 4;
  params.dim_y = 3;
  params.n = 20;
  params.noise = 0.5;
  params.seed = 15;
  ToyBilinearProblem toy = ToyBilinearProblem::random(params);
  RngStream rng(61, 2);
  Vec x = random_point_in(toy.set_x(), rng);
  Vec y = random_point_in(toy.set_y(), rng);
  Vec mean(toy.dim_x(), 0.0), buf(toy.dim_x()), g(toy.dim_x());
  std::vector<double> sumsq(toy.dim_x(), 0.0);
  const int draws = 100000;
  for (int m = 0; m < draws; ++m) {
    const std::size_t i = rng.uniform_index(toy.components());
    toy.comp_grad_x(i, x, y, buf);
    for (std::size_t k = 0; k < buf.size(); ++k) {
      mean[k] += buf[k];
      sumsq[k] += buf[k] * buf[k];
    }
  }
  toy.grad_x(x, y, g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double mk = mean[k] / draws;
    const double var = sumsq[k] / draws - mk * mk;
    const double se = std::sqrt(std::max(var, 1e-30) / draws);
    CHECK(std::abs(mk - g[k]) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("poison accuracy examples") {
  PoisonData pd;
  Dataset test;
  small_poison(31, &pd, &test);
  // generator parameters classify their own data nearly perfectly
  CHECK(poison_accuracy(test, pd.theta_star) >= 0.95);
  // theta = 0 predicts class 0 everywhere
  double frac0 = 0.0;
  for (auto l : test.labels) frac0 += (l == 0);
  frac0 /= static_cast<double>(test.n);
  CHECK(poison_accuracy(test, Vec(pd.theta_star.size(), 0.0)) ==
        doctest::Approx(frac0));
  // sign-flipped parameters get nearly everything wrong
  Vec neg = pd.theta_star;
  scale(-1.0, View(neg));
  CHECK(poison_accuracy(test, neg) <= 0.05);
  CHECK_THROWS_AS(poison_accuracy(Dataset{}, pd.theta_star),
                  std::invalid_argument);
}

TEST_CASE("poison components: clean samples have zero attack gradient") {
  PoisonProblem pois = small_poison(33);
  RngStream rng(71, 1);
  Vec x = random_point_in(pois.set_x(), rng);
  Vec th(pois.dim_y());
  for (auto& v : th) v = 0.1 * rng.normal();  // keep the sigmoid unsaturated
  Vec g(pois.dim_x());
  pois.comp_grad_x(pois.poisoned_count(), x, th, g);  // first clean component
  CHECK(nrm2(g) == 0.0);
  pois.comp_grad_x(0, x, th, g);  // poisoned component
  CHECK(nrm2(g) > 0.0);
}

TEST_CASE("component index out of range throws") {
  ToyBilinearProblem toy = identity_toy();
  Vec x{0.0, 0.0}, y{0.5, 0.5}, g(2);
  CHECK_THROWS_AS(toy.comp_grad_x(99, x, y, g), std::out_of_range);
  CHECK_THROWS_AS(toy.comp_value(99, x, y), std::out_of_range);
}

TEST_CASE("exact primal: absent on the poisoning problem, throws via wrapper") {
  PoisonProblem pois = small_poison(35);
  Vec x(pois.dim_x(), 0.0);
  CHECK(!pois.exact_primal(x).has_value());
  CHECK_THROWS_AS(exact_primal_or_throw(pois, x), std::runtime_error);
}

TEST_CASE("logistic exact primal equals the loss maximum plus regularizer") {
  RobustLogisticProblem logi = synthetic_logistic(15, 5, 10);
  RngStream rng(81, 4);
  Vec x = random_point_in(logi.set_x(), rng);
  double max_loss = 0.0;
  for (std::size_t i = 0; i < logi.components(); ++i) {
    max_loss = std::max(max_loss, logi.component_loss(i, x));
  }
  CHECK(*logi.exact_primal(x) ==
        doctest::Approx(max_loss + logi.regularizer(x)));

  // with the dual regularizer on, the primal value is attained by the
  // projected regularized maximizer and still dominates every feasible y
  RobustLogisticProblem logi1 = synthetic_logistic(15, 5, 10, true);
  const double primal = *logi1.exact_primal(x);
  for (int cse = 0; cse < 200; ++cse) {
    Vec y = random_point_in(logi1.set_y(), rng);
    CHECK(primal >= logi1.value(x, y) - 1e-9);
  }
}

TEST_CASE("toy inner argmin matches a dense scan on a grid") {
  ToyBilinearProblem toy = identity_toy();
  // K(x,z;y) with r=3: minimizer clamp((3 z - A y) / (3 - 1))
  Vec y{0.3, 0.7}, z{0.5, -0.25};
  Vec got(2);
  REQUIRE(toy.inner_argmin_x(y, z, 3.0, got));
  const Vec expect{(3.0 * 0.5 - 0.3) / 2.0, (3.0 * -0.25 - 0.7) / 2.0};
  CHECK(got[0] == doctest::Approx(expect[0]));
  CHECK(got[1] == doctest::Approx(expect[1]));
}

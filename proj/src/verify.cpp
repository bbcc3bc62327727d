#include "ncc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ncc::verify {
namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double var = 0.0;
  for (double v : xs) var += (v - mean) * (v - mean);
  var /= (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

Vec brute_force_simplex_projection(ConstView p) {
  const std::size_t dim = p.size();
  if (dim == 0 || dim > 16) {
    throw std::invalid_argument("brute_force_simplex_projection: dim out of range");
  }
  double best = std::numeric_limits<double>::infinity();
  Vec best_y(dim, 0.0);
  Vec cand(dim);
  const std::uint32_t full = (1u << dim) - 1u;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    // Equality-constrained minimizer on the support: y_i = p_i - theta
    double sum = 0.0;
    std::size_t k = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      if (mask & (1u << j)) {
        sum += p[j];
        ++k;
      }
    }
    const double theta = (sum - 1.0) / static_cast<double>(k);
    bool feasible = true;
    std::fill(cand.begin(), cand.end(), 0.0);
    for (std::size_t j = 0; j < dim && feasible; ++j) {
      if (mask & (1u << j)) {
        cand[j] = p[j] - theta;
        feasible = cand[j] >= -1e-14;
      }
    }
    if (!feasible) continue;
    const double dist = dist2sq(cand, p);
    if (dist < best) {
      best = dist;
      best_y = cand;
    }
  }
  for (double& v : best_y) v = std::max(v, 0.0);
  return best_y;
}

ProjectionSuiteResult run_projection_suite(std::uint64_t seed,
                                           std::size_t cases_per_dim) {
  ProjectionSuiteResult res;
  RngStream rng(seed, fnv1a("projection-suite"));
  for (std::size_t dim = 2; dim <= 6; ++dim) {
    FeasibleSet simplex = FeasibleSet::simplex(dim);
    Vec p(dim), q(dim), a(dim), b(dim);
    for (std::size_t cse = 0; cse < cases_per_dim; ++cse) {
      // mixed scales, including points far outside
      const double scl = cse % 3 == 0 ? 1.0 : (cse % 3 == 1 ? 10.0 : 0.1);
      for (auto& v : p) v = scl * (2.0 * rng.uniform() - 1.0);
      Vec got = simplex.project(p);
      Vec want = brute_force_simplex_projection(p);
      for (std::size_t j = 0; j < dim; ++j) {
        res.max_coord_error =
            std::max(res.max_coord_error, std::abs(got[j] - want[j]));
      }
      // optimality against a random feasible point
      for (auto& v : q) v = rng.uniform();
      simplex.project(q, q);
      const double viol = dist2(got, p) - dist2(q, p);
      res.max_optimality_violation = std::max(res.max_optimality_violation, viol);
      // non-expansiveness
      for (std::size_t j = 0; j < dim; ++j) {
        a[j] = scl * (2.0 * rng.uniform() - 1.0);
        b[j] = scl * (2.0 * rng.uniform() - 1.0);
      }
      const double lhs = dist2(simplex.project(a), simplex.project(b));
      res.max_nonexpansive_violation =
          std::max(res.max_nonexpansive_violation, lhs - dist2(a, b));
      ++res.cases;
    }
  }
  res.passed = res.max_coord_error <= 1e-9 &&
               res.max_optimality_violation <= 1e-10 &&
               res.max_nonexpansive_violation <= 1e-12;
  return res;
}

// ---------------------------------------------------------------------------

namespace {

ToyBilinearProblem recursion_toy() {
  ToyBilinearProblem::Params params;
  params.dim_x = 5;
  params.dim_y = 5;
  params.n = 50;
  params.c = 0.5;
  params.scale = 0.5;
  params.noise = 0.2;
  params.seed = 11;
  params.box_halfwidth = 2.0;
  return ToyBilinearProblem::random(params);
}

// Captures the fixed state needed by the recursion checks: the estimator at
// iteration t, the deterministic step to t+1, and the exact gradients at
// both points.
struct FixedState {
  Vec gkx_t, gky_t;     // grad K at t
  Vec gkx_t1, gky_t1;   // grad K at t+1
  double err_x_t = 0.0, err_y_t = 0.0;  // squared estimator errors at t
  double dx2 = 0.0, dy2 = 0.0, dz2 = 0.0;
  double tracker_x_t = 0.0, tracker_y_t = 0.0;  // (1/n) sums at t
  std::vector<double> ex1;  // per-component ||grad_x K_{i,t+1} - d_{i,t}||^2
  std::vector<double> ey1;
  double ex1_total = 0.0, ey1_total = 0.0;
};

FixedState capture_state(SolverLoop& loop) {
  FixedState fs;
  const MinimaxProblem& prob = loop.problem();
  const std::size_t dx = prob.dim_x(), dy = prob.dim_y();
  const std::size_t n = prob.components();
  RegularizedOracle& oracle = loop.oracle();

  loop.estimator_update();
  const Vec x_t = loop.x(), y_t = loop.y(), z_t = loop.z();
  fs.gkx_t.resize(dx);
  fs.gky_t.resize(dy);
  oracle.full_grad_x(x_t, z_t, y_t, fs.gkx_t, Lane::Diag);
  oracle.full_grad_y(x_t, y_t, fs.gky_t, Lane::Diag);
  fs.err_x_t = dist2sq(fs.gkx_t, loop.est().v);
  fs.err_y_t = dist2sq(fs.gky_t, loop.est().w);

  const bool trackers = loop.config().scheme == Scheme::ZeroSarahSgda;
  Vec buf(std::max(dx, dy));
  if (trackers) {
    double tx = 0.0, ty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      View bx(buf.data(), dx);
      oracle.comp_grad_x(i, x_t, z_t, y_t, bx, Lane::Diag);
      tx += dist2sq(ConstView(bx),
                    ConstView(loop.est().d_flat).subspan(i * dx, dx));
      View by(buf.data(), dy);
      oracle.comp_grad_y(i, x_t, y_t, by, Lane::Diag);
      ty += dist2sq(ConstView(by),
                    ConstView(loop.est().h_flat).subspan(i * dy, dy));
    }
    fs.tracker_x_t = tx / static_cast<double>(n);
    fs.tracker_y_t = ty / static_cast<double>(n);
  }

  loop.gda_step();
  const Vec& x1 = loop.x();
  const Vec& y1 = loop.y();
  const Vec& z1 = loop.z();
  fs.dx2 = dist2sq(x1, x_t);
  fs.dy2 = dist2sq(y1, y_t);
  fs.dz2 = dist2sq(z1, z_t);
  fs.gkx_t1.resize(dx);
  fs.gky_t1.resize(dy);
  oracle.full_grad_x(x1, z1, y1, fs.gkx_t1, Lane::Diag);
  oracle.full_grad_y(x1, y1, fs.gky_t1, Lane::Diag);

  if (trackers) {
    fs.ex1.resize(n);
    fs.ey1.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      View bx(buf.data(), dx);
      oracle.comp_grad_x(i, x1, z1, y1, bx, Lane::Diag);
      fs.ex1[i] = dist2sq(ConstView(bx),
                          ConstView(loop.est().d_flat).subspan(i * dx, dx));
      View by(buf.data(), dy);
      oracle.comp_grad_y(i, x1, y1, by, Lane::Diag);
      fs.ey1[i] = dist2sq(ConstView(by),
                          ConstView(loop.est().h_flat).subspan(i * dy, dy));
    }
    fs.ex1_total = std::accumulate(fs.ex1.begin(), fs.ex1.end(), 0.0);
    fs.ey1_total = std::accumulate(fs.ey1.begin(), fs.ey1.end(), 0.0);
  }
  return fs;
}

RecursionCheck make_check(const char* name, std::uint64_t t, double lhs,
                          double rhs, double se) {
  RecursionCheck c;
  c.inequality = name;
  c.state_t = t;
  c.lhs = lhs;
  c.rhs = rhs;
  c.stderr_ = se;
  const double slack = 1e-12 * std::max(1.0, std::abs(lhs));
  c.satisfied = lhs >= rhs - 3.0 * se - slack;
  return c;
}

}  // namespace

RecursionSuiteResult run_estimator_recursion_suite(std::uint64_t seed,
                                                   std::size_t draws) {
  RecursionSuiteResult out;
  out.draws = draws;
  ToyBilinearProblem toy = recursion_toy();
  const double L = toy.lipschitz_estimate();
  const double r = 2.0 * std::max(L, 1.0);
  const std::size_t n = toy.components();
  const std::vector<std::uint64_t> states = {1, 3, 6, 10, 15};

  // --- PVR: inequalities on the v and w error recursions ---
  {
    StepSizeResult ss = pvr_step_sizes(L, 0.5, r, toy.set_y().diameter());
    SolverConfig cfg;
    cfg.scheme = Scheme::PvrSgda;
    cfg.eta_x = ss.eta_x;
    cfg.eta_y = ss.eta_y;
    cfg.rho = ss.rho;
    cfg.r = r;
    cfg.p = 0.5;
    cfg.batch = 1;
    cfg.iterations = 0;
    cfg.seed = seed;
    cfg.run_id = fnv1a("recursion-pvr");
    SolverLoop loop(toy, cfg);
    const double Lc = ss.constants.L;  // clamped
    for (std::uint64_t st : states) {
      while (loop.t() < st) loop.iterate();
      FixedState fs = capture_state(loop);
      std::vector<double> ex(draws), ey(draws);
      for (std::size_t m = 0; m < draws; ++m) {
        SolverLoop rl = loop;
        rl.reseed(seed, fnv1a("pvr-draw") + st * 2654435761ULL + m);
        rl.estimator_update();
        ex[m] = dist2sq(fs.gkx_t1, rl.est().v);
        ey[m] = dist2sq(fs.gky_t1, rl.est().w);
      }
      const MeanSe mx = mean_se(ex);
      const MeanSe my = mean_se(ey);
      const double p = cfg.p;
      const double rhs_x =
          p * fs.err_x_t - 3.0 * (1.0 - p) * ((Lc + r) * (Lc + r) * fs.dx2 +
                                              Lc * Lc * fs.dy2 + r * r * fs.dz2);
      const double rhs_y = p * fs.err_y_t -
                           2.0 * (1.0 - p) * Lc * Lc * (fs.dx2 + fs.dy2);
      out.checks.push_back(
          make_check("pvr_x", st, fs.err_x_t - mx.mean, rhs_x, mx.se));
      out.checks.push_back(
          make_check("pvr_y", st, fs.err_y_t - my.mean, rhs_y, my.se));
    }
  }

  // --- ZeroSARAH: estimator recursions and tracker recursions ---
  {
    StepSizeResult ss = zerosarah_step_sizes(L, n, 2.0, r, toy.set_y().diameter());
    SolverConfig cfg;
    cfg.scheme = Scheme::ZeroSarahSgda;
    cfg.eta_x = ss.eta_x;
    cfg.eta_y = ss.eta_y;
    cfg.rho = ss.rho;
    cfg.r = r;
    cfg.batch = ss.constants.b;
    cfg.lambda = ss.constants.lambda;
    cfg.iterations = 0;
    cfg.seed = seed;
    cfg.run_id = fnv1a("recursion-zs");
    SolverLoop loop(toy, cfg);
    const double Lc = ss.constants.L;
    const double lambda = ss.constants.lambda;
    const double b = static_cast<double>(cfg.batch);
    const double zeta = ss.constants.zeta;
    const double xi = ss.constants.xi;
    for (std::uint64_t st : states) {
      while (loop.t() < st) loop.iterate();
      FixedState fs = capture_state(loop);
      std::vector<double> ex(draws), ey(draws), tx(draws), ty(draws);
      for (std::size_t m = 0; m < draws; ++m) {
        SolverLoop rl = loop;
        rl.reseed(seed, fnv1a("zs-draw") + st * 2654435761ULL + m);
        rl.estimator_update();
        ex[m] = dist2sq(fs.gkx_t1, rl.est().v);
        ey[m] = dist2sq(fs.gky_t1, rl.est().w);
        // Tracker errors after the refresh: entries in the batch are exact.
        double sx = fs.ex1_total, sy = fs.ey1_total;
        for (std::uint32_t i : rl.est().last_batch) {
          sx -= fs.ex1[i];
          sy -= fs.ey1[i];
        }
        tx[m] = sx / static_cast<double>(n);
        ty[m] = sy / static_cast<double>(n);
      }
      const MeanSe mx = mean_se(ex);
      const MeanSe my = mean_se(ey);
      const MeanSe mtx = mean_se(tx);
      const MeanSe mty = mean_se(ty);
      const double lr2 = (Lc + r) * (Lc + r);
      const double rhs_v = lambda * fs.err_x_t -
                           2.0 * lambda * lambda / b * fs.tracker_x_t -
                           6.0 * lr2 / b * fs.dx2 - 6.0 * Lc * Lc / b * fs.dy2 -
                           6.0 * r * r / b * fs.dz2;
      const double rhs_w = lambda * fs.err_y_t -
                           2.0 * lambda * lambda / b * fs.tracker_y_t -
                           4.0 * Lc * Lc / b * (fs.dx2 + fs.dy2);
      const double rhs_d = (1.0 - zeta) * fs.tracker_x_t -
                           3.0 * xi * (lr2 * fs.dx2 + Lc * Lc * fs.dy2 +
                                       r * r * fs.dz2);
      const double rhs_h = (1.0 - zeta) * fs.tracker_y_t -
                           2.0 * xi * Lc * Lc * (fs.dx2 + fs.dy2);
      out.checks.push_back(
          make_check("zs_v", st, fs.err_x_t - mx.mean, rhs_v, mx.se));
      out.checks.push_back(
          make_check("zs_w", st, fs.err_y_t - my.mean, rhs_w, my.se));
      out.checks.push_back(
          make_check("zs_d", st, fs.tracker_x_t - mtx.mean, rhs_d, mtx.se));
      out.checks.push_back(
          make_check("zs_h", st, fs.tracker_y_t - mty.mean, rhs_h, mty.se));
    }
  }

  out.passed = std::all_of(out.checks.begin(), out.checks.end(),
                           [](const RecursionCheck& c) { return c.satisfied; });
  return out;
}

DescentSuiteResult run_descent_suite(std::uint64_t seed, std::size_t replicas,
                                     std::size_t probe_count) {
  DescentSuiteResult out;
  ToyBilinearProblem toy = recursion_toy();
  const double L = toy.lipschitz_estimate();
  const double r = 2.0 * std::max(L, 1.0);
  const double dy = toy.set_y().diameter();

  std::vector<std::uint64_t> probes(probe_count);
  for (std::size_t i = 0; i < probe_count; ++i) {
    probes[i] = 1 + i + (i * i) / 4;  // 1,2,4,5,7,9,12,14,17,21
  }

  {
    StepSizeResult ss = pvr_step_sizes(L, 0.5, r, dy);
    SolverConfig cfg;
    cfg.scheme = Scheme::PvrSgda;
    cfg.eta_x = ss.eta_x;
    cfg.eta_y = ss.eta_y;
    cfg.rho = ss.rho;
    cfg.r = r;
    cfg.p = 0.5;
    cfg.batch = 1;
    cfg.seed = seed;
    cfg.run_id = fnv1a("descent-pvr");
    out.pvr = check_descent(toy, cfg, ss.constants, probes, replicas, seed);
  }
  {
    StepSizeResult ss =
        zerosarah_step_sizes(L, toy.components(), 2.0, r, dy);
    SolverConfig cfg;
    cfg.scheme = Scheme::ZeroSarahSgda;
    cfg.eta_x = ss.eta_x;
    cfg.eta_y = ss.eta_y;
    cfg.rho = ss.rho;
    cfg.r = r;
    cfg.batch = ss.constants.b;
    cfg.lambda = ss.constants.lambda;
    cfg.seed = seed;
    cfg.run_id = fnv1a("descent-zs");
    out.zerosarah =
        check_descent(toy, cfg, ss.constants, probes, replicas, seed);
  }

  auto count_ok = [](const DescentReport& r) {
    return static_cast<std::size_t>(
        std::count_if(r.probes.begin(), r.probes.end(),
                      [](const DescentProbe& p) { return p.satisfied; }));
  };
  out.min_satisfied = probe_count - probe_count / 10;  // 9/10 at ten probes
  out.passed = count_ok(out.pvr) >= out.min_satisfied &&
               count_ok(out.zerosarah) >= out.min_satisfied;
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const ProjectionSuiteResult& r) {
  return {{"suite", "projections"},
          {"cases", r.cases},
          {"max_coord_error", r.max_coord_error},
          {"max_optimality_violation", r.max_optimality_violation},
          {"max_nonexpansive_violation", r.max_nonexpansive_violation},
          {"passed", r.passed}};
}

nlohmann::json to_json(const RecursionSuiteResult& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"inequality", c.inequality},
                      {"iteration", c.state_t},
                      {"lhs", c.lhs},
                      {"rhs", c.rhs},
                      {"stderr", c.stderr_},
                      {"verdict", c.satisfied ? "satisfied" : "violated"}});
  }
  return {{"suite", "estimators"},
          {"draws", r.draws},
          {"checks", checks},
          {"passed", r.passed}};
}

nlohmann::json to_json(const DescentReport& r) {
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : r.probes) {
    probes.push_back({{"iteration", p.iteration},
                      {"lhs", p.lhs},
                      {"rhs", p.rhs},
                      {"stderr", p.stderr_},
                      {"verdict", p.satisfied ? "satisfied" : "violated"}});
  }
  return {{"scheme", scheme_name(r.scheme)},
          {"replicas", r.replicas},
          {"probes", probes},
          {"passed", r.passed}};
}

nlohmann::json to_json(const DescentSuiteResult& r) {
  return {{"suite", "descent"},
          {"min_satisfied_per_scheme", r.min_satisfied},
          {"pvr", to_json(r.pvr)},
          {"zerosarah", to_json(r.zerosarah)},
          {"passed", r.passed}};
}

}  // namespace ncc::verify

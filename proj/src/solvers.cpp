#include "ncc/solvers.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace ncc {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::PvrSgda: return "pvr_sgda";
    case Scheme::ZeroSarahSgda: return "zerosarah_sgda";
    case Scheme::StocGda: return "stocgda";
    case Scheme::VrAgda: return "vr_agda";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "pvr_sgda" || name == "pvr") return Scheme::PvrSgda;
  if (name == "zerosarah_sgda" || name == "zerosarah") return Scheme::ZeroSarahSgda;
  if (name == "stocgda") return Scheme::StocGda;
  if (name == "vr_agda" || name == "vragda") return Scheme::VrAgda;
  throw std::invalid_argument("unknown scheme: " + name);
}

namespace {

bool smoothed_scheme(Scheme s) {
  return s == Scheme::PvrSgda || s == Scheme::ZeroSarahSgda;
}

}  // namespace

SolverLoop::SolverLoop(const MinimaxProblem& problem, const SolverConfig& config)
    : problem_(&problem),
      cfg_(config),
      oracle_(problem, smoothed_scheme(config.scheme) ? config.r : 0.0),
      rng_(config.seed, config.run_id) {
  const std::size_t n = problem.components();
  lipschitz_ = problem.lipschitz_estimate();

  if (!(cfg_.eta_x > 0.0) || !(cfg_.eta_y > 0.0)) {
    throw std::invalid_argument("solver config: step sizes must be positive");
  }
  if (cfg_.cadence == 0) {
    throw std::invalid_argument("solver config: cadence must be >= 1");
  }
  if (cfg_.batch == 0 || cfg_.batch > n) {
    throw std::invalid_argument("solver config: need 0 < batch <= n");
  }
  if (smoothed_scheme(cfg_.scheme)) {
    if (!(cfg_.rho > 0.0) || cfg_.rho > 1.0) {
      throw std::invalid_argument("solver config: need 0 < rho <= 1");
    }
    if (!(cfg_.r > lipschitz_)) {
      throw std::invalid_argument(
          "solver config: smoothing weight r must exceed the smoothness "
          "estimate (r > L)");
    }
  }
  if (cfg_.scheme == Scheme::PvrSgda) {
    if (!(cfg_.p > 0.0) || cfg_.p > 1.0) {
      throw std::invalid_argument("solver config: need p in (0, 1]");
    }
  }
  if (cfg_.scheme == Scheme::ZeroSarahSgda) {
    lambda_ = cfg_.lambda > 0.0 ? cfg_.lambda
                                : 1.0 / static_cast<double>(cfg_.batch);
    if (lambda_ > 1.0) {
      throw std::invalid_argument("solver config: need lambda in (0, 1]");
    }
  }
  if (cfg_.scheme == Scheme::VrAgda) {
    snapshot_period_ = cfg_.snapshot_period > 0
                           ? cfg_.snapshot_period
                           : std::max<std::size_t>(1, n / cfg_.batch);
  }

  // x0 = P_X(0), y0 = set center (simplex barycenter), z0 = x0
  const std::size_t dx = problem.dim_x();
  const std::size_t dy = problem.dim_y();
  Vec zero(dx, 0.0);
  x_ = problem.set_x().project(zero);
  y_ = problem.set_y().center();
  z_ = x_;
  x_next_.assign(dx, 0.0);
  y_next_.assign(dy, 0.0);
  step_buf_.assign(std::max(dx, dy), 0.0);

  est_.init(n, dx, dy, cfg_.scheme == Scheme::ZeroSarahSgda,
            cfg_.scheme == Scheme::VrAgda);
  if (cfg_.scheme == Scheme::ZeroSarahSgda) {
    // x_{-1} = x_0 convention; literal mode starts from zero estimators
    est_.set_prev(x_, y_, z_);
  }
}

void SolverLoop::reseed(std::uint64_t master_seed, std::uint64_t run_id) {
  rng_ = RngStream(master_seed, run_id);
}

void SolverLoop::draw_batch(std::vector<std::uint32_t>& out) {
  rng_.sample_without_replacement(problem_->components(), cfg_.batch, out,
                                  est_.sample_scratch);
}

void SolverLoop::estimator_update() {
  switch (cfg_.scheme) {
    case Scheme::PvrSgda: {
      // the full-gradient branch is forced at t = 0 so v_0 is exact
      const bool heads = t_ == 0 ? true : rng_.bernoulli(cfg_.p);
      if (heads) {
        ++heads_;
        pvr_update(est_, oracle_, true, {}, {}, x_, z_, y_);
      } else {
        ++tails_;
        draw_batch(batch_);
        if (cfg_.coupled_batches) {
          batch2_ = batch_;
        } else {
          draw_batch(batch2_);
        }
        pvr_update(est_, oracle_, false, batch_, batch2_, x_, z_, y_);
      }
      break;
    }
    case Scheme::ZeroSarahSgda: {
      if (!cfg_.zs_literal_init && !warm_done_) {
        zerosarah_warm_init(est_, oracle_, x_, z_, y_);
        warm_done_ = true;
      }
      draw_batch(batch_);
      zerosarah_update(est_, oracle_, batch_, lambda_, x_, z_, y_,
                       cfg_.resum_period);
      break;
    }
    case Scheme::StocGda: {
      draw_batch(batch_);
      if (cfg_.coupled_batches) {
        batch2_ = batch_;
      } else {
        draw_batch(batch2_);
      }
      minibatch_update(est_, oracle_, batch_, batch2_, x_, z_, y_);
      break;
    }
    case Scheme::VrAgda:
      throw std::logic_error("VR-AGDA uses iterate(); it has no phase split");
  }
  estimator_ready_ = true;
}

void SolverLoop::step_x_y() {
  View sx(step_buf_.data(), x_.size());
  saxpby(1.0, x_, -cfg_.eta_x, est_.v, sx);
  problem_->set_x().project(sx, x_next_);
  View sy(step_buf_.data(), y_.size());
  saxpby(1.0, y_, cfg_.eta_y, est_.w, sy);
  problem_->set_y().project(sy, y_next_);
}

void SolverLoop::check_box_touch() {
  bool touched = false;
  const FeasibleSet& sx = problem_->set_x();
  if (sx.kind() == FeasibleSet::Kind::Box) {
    for (std::size_t i = 0; i < x_.size() && !touched; ++i) {
      touched = x_[i] == sx.lo()[i] || x_[i] == sx.hi()[i];
    }
  }
  const FeasibleSet& sy = problem_->set_y();
  if (!touched && sy.kind() == FeasibleSet::Kind::Box) {
    for (std::size_t i = 0; i < y_.size() && !touched; ++i) {
      touched = y_[i] == sy.lo()[i] || y_[i] == sy.hi()[i];
    }
  }
  if (touched) ++box_touches_;
}

void SolverLoop::gda_step() {
  if (!estimator_ready_) {
    throw std::logic_error("gda_step called before estimator_update");
  }
  step_x_y();
  x_.swap(x_next_);
  y_.swap(y_next_);
  if (smoothed_scheme(cfg_.scheme)) {
    // z <- z + rho (x_{t+1} - z)
    add_scaled_diff(cfg_.rho, x_, z_, z_);
  } else {
    z_ = x_;
  }
  check_box_touch();
  ++t_;
  estimator_ready_ = false;
}

void SolverLoop::iterate() {
  if (cfg_.scheme != Scheme::VrAgda) {
    estimator_update();
    gda_step();
    return;
  }
  // Alternating GDA with SVRG estimators: x-step with stale y, then y-step
  // with the fresh x.
  if (t_ % snapshot_period_ == 0) {
    svrg_refresh(est_, oracle_, x_, z_, y_);
    ++refreshes_;
  }
  draw_batch(batch_);
  if (cfg_.coupled_batches) {
    batch2_ = batch_;
  } else {
    draw_batch(batch2_);
  }
  svrg_update_x(est_, oracle_, batch_, x_, z_, y_);
  View sx(step_buf_.data(), x_.size());
  saxpby(1.0, x_, -cfg_.eta_x, est_.v, sx);
  problem_->set_x().project(sx, x_next_);

  svrg_update_y(est_, oracle_, batch2_, x_next_, y_);
  View sy(step_buf_.data(), y_.size());
  saxpby(1.0, y_, cfg_.eta_y, est_.w, sy);
  problem_->set_y().project(sy, y_next_);

  x_.swap(x_next_);
  y_.swap(y_next_);
  z_ = x_;
  check_box_touch();
  ++t_;
}

std::uint64_t SolverLoop::expected_oracle_count() const {
  const std::size_t n = problem_->components();
  switch (cfg_.scheme) {
    case Scheme::PvrSgda:
      return pvr_expected_count(n, cfg_.batch, heads_, tails_);
    case Scheme::ZeroSarahSgda:
      return zerosarah_expected_count(n, cfg_.batch, t_, !cfg_.zs_literal_init);
    case Scheme::StocGda:
      return stocgda_expected_count(cfg_.batch, t_);
    case Scheme::VrAgda:
      return vragda_expected_count(n, cfg_.batch, t_, refreshes_);
  }
  return 0;
}

std::pair<double, double> game_residuals(const MinimaxProblem& problem,
                                         ConstView x, ConstView y, double eta,
                                         OracleCounters* diag) {
  thread_local Vec gx, gy;
  gx.resize(problem.dim_x());
  gy.resize(problem.dim_y());
  problem.grad_x(x, y, gx);
  problem.grad_y(x, y, gy);
  if (diag) diag->diag += 2 * problem.components();
  const double res_x = problem.set_x().stationarity_residual(x, gx, eta);
  scale(-1.0, View(gy));  // Definition uses -grad_y f on the dual side
  const double res_y = problem.set_y().stationarity_residual(y, gy, eta);
  return {res_x, res_y};
}

namespace {

struct Tracer {
  const MinimaxProblem& problem;
  const SolverConfig& cfg;
  const RunHooks& hooks;
  RunResult& res;
  double residual_eta;
  std::chrono::steady_clock::time_point start;
  Vec gx, gy, gkx, gky;

  void emit(SolverLoop& loop, bool with_estimator) {
    TraceRecord rec;
    rec.t = loop.t();
    rec.oracle_count = loop.oracle().counters().algo;

    const Vec& x = loop.x();
    const Vec& y = loop.y();
    gx.resize(problem.dim_x());
    gy.resize(problem.dim_y());
    problem.grad_x(x, y, gx);
    problem.grad_y(x, y, gy);
    loop.oracle().counters().diag += 2 * problem.components();
    rec.res_x = problem.set_x().stationarity_residual(x, gx, residual_eta);
    thread_local Vec neg;
    neg.resize(gy.size());
    saxpby(-1.0, gy, 0.0, gy, neg);
    rec.res_y = problem.set_y().stationarity_residual(y, neg, residual_eta);

    if (auto primal = problem.exact_primal(x)) rec.primal = *primal;

    if (with_estimator && cfg.diag_estimator_error) {
      // grad_x K = grad_x f + r(x - z): reuse the residual gradients
      gkx = gx;
      if (loop.oracle().r() != 0.0) {
        axpy(loop.oracle().r(), x, gkx);
        axpy(-loop.oracle().r(), loop.z(), gkx);
      }
      rec.err_x = dist2(gkx, loop.est().v);
      rec.err_y = dist2(gy, loop.est().w);
    }
    if (with_estimator && cfg.diag_potential && hooks.potential) {
      rec.phi = hooks.potential(loop);
    }
    if (hooks.accuracy) rec.accuracy = hooks.accuracy(y);
    if (cfg.track_timing) {
      rec.wall_s = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    }
    rec.diag_oracle_count = loop.oracle().counters().diag;

    const double res_max = std::max(rec.res_x, rec.res_y);
    if (res_max < res.best_residual) {
      res.best_residual = res_max;
      res.best_t = rec.t;
      res.x_best = x;
      res.y_best = y;
    }
    res.trace.push_back(rec);
  }
};

RunResult run_impl(const MinimaxProblem& problem, const SolverConfig& config,
                   const RunHooks& hooks) {
  SolverLoop loop(problem, config);
  RunResult res;
  const double L = loop.lipschitz();
  const double reta = config.residual_eta > 0.0 ? config.residual_eta : 1.0 / L;
  Tracer tracer{problem, config,
                hooks,   res,
                reta,    std::chrono::steady_clock::now(),
                {},      {},
                {},      {}};

  const bool split = config.scheme != Scheme::VrAgda;
  for (std::uint64_t t = 0; t < config.iterations; ++t) {
    if (split) {
      loop.estimator_update();
      if (t % config.cadence == 0) tracer.emit(loop, true);
      loop.gda_step();
    } else {
      if (t % config.cadence == 0) tracer.emit(loop, false);
      loop.iterate();
    }
  }
  // final iterate record; no live estimator at t = T
  tracer.emit(loop, false);

  res.x_final = loop.x();
  res.y_final = loop.y();
  res.z_final = loop.z();
  res.counters = loop.oracle().counters();
  res.heads = loop.heads();
  res.tails = loop.tails();
  res.snapshot_refreshes = loop.snapshot_refreshes();
  res.expected_oracle_count = loop.expected_oracle_count();
  res.box_touch_count = loop.box_touch_count();
  res.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - tracer.start)
                         .count();
  return res;
}

void require_scheme(const SolverConfig& cfg, Scheme s, const char* who) {
  if (cfg.scheme != s) {
    throw std::invalid_argument(std::string(who) + ": config.scheme mismatch");
  }
}

}  // namespace

RunResult run_solver(const MinimaxProblem& problem, const SolverConfig& config,
                     const RunHooks& hooks) {
  return run_impl(problem, config, hooks);
}

RunResult run_pvr_sgda(const MinimaxProblem& p, const SolverConfig& c,
                       const RunHooks& h) {
  require_scheme(c, Scheme::PvrSgda, "run_pvr_sgda");
  return run_impl(p, c, h);
}

RunResult run_zerosarah_sgda(const MinimaxProblem& p, const SolverConfig& c,
                             const RunHooks& h) {
  require_scheme(c, Scheme::ZeroSarahSgda, "run_zerosarah_sgda");
  return run_impl(p, c, h);
}

RunResult run_stocgda(const MinimaxProblem& p, const SolverConfig& c,
                      const RunHooks& h) {
  require_scheme(c, Scheme::StocGda, "run_stocgda");
  return run_impl(p, c, h);
}

RunResult run_vr_agda(const MinimaxProblem& p, const SolverConfig& c,
                      const RunHooks& h) {
  require_scheme(c, Scheme::VrAgda, "run_vr_agda");
  return run_impl(p, c, h);
}

}  // namespace ncc

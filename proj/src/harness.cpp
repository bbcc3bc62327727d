#include "ncc/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace ncc {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double jget(const json& j, const char* key, double dflt) {
  return j.contains(key) ? j.at(key).get<double>() : dflt;
}
std::uint64_t jget_u(const json& j, const char* key, std::uint64_t dflt) {
  return j.contains(key) ? j.at(key).get<std::uint64_t>() : dflt;
}
std::size_t jget_sz(const json& j, const char* key, std::size_t dflt) {
  return j.contains(key) ? j.at(key).get<std::size_t>() : dflt;
}
bool jget_b(const json& j, const char* key, bool dflt) {
  return j.contains(key) ? j.at(key).get<bool>() : dflt;
}
std::string jget_s(const json& j, const char* key, const std::string& dflt) {
  return j.contains(key) ? j.at(key).get<std::string>() : dflt;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '-');
  }
  return out.empty() ? "run" : out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  cfg.master_seed = jget_u(j, "master_seed", 1);
  cfg.out_dir = jget_s(j, "out_dir", "runs/out");
  cfg.cadence = jget_u(j, "cadence", 1);
  cfg.workers = jget_sz(j, "workers", 1);
  cfg.timing = jget_b(j, "timing", false);
  if (j.contains("thresholds")) {
    cfg.thresholds = j.at("thresholds").get<std::vector<double>>();
  }
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  }
  if (cfg.seeds.empty()) {
    throw std::invalid_argument("experiment config: need at least one seed");
  }

  if (j.contains("problem")) {
    const json& p = j.at("problem");
    ProblemSpec& ps = cfg.problem;
    ps.name = jget_s(p, "name", "toy_bilinear");
    ps.dim_x = jget_sz(p, "dim_x", ps.dim_x);
    ps.dim_y = jget_sz(p, "dim_y", ps.dim_y);
    ps.n = jget_sz(p, "n", ps.n);
    ps.c = jget(p, "c", ps.c);
    ps.scale = jget(p, "scale", ps.scale);
    ps.noise = jget(p, "noise", ps.noise);
    ps.structure = jget_s(p, "structure", ps.structure);
    ps.instance_seed = jget_u(p, "instance_seed", ps.instance_seed);
    ps.box_halfwidth = jget(p, "box_halfwidth", ps.box_halfwidth);
    ps.data_path = jget_s(p, "data", ps.data_path);
    ps.subsample = jget_sz(p, "subsample", ps.subsample);
    ps.subsample_seed = jget_u(p, "subsample_seed", ps.subsample_seed);
    ps.lambda2 = jget(p, "lambda2", ps.lambda2);
    ps.alpha = jget(p, "alpha", ps.alpha);
    ps.lambda1_enabled = jget_b(p, "lambda1_enabled", ps.lambda1_enabled);
    ps.lambda1 = jget(p, "lambda1", ps.lambda1);
    ps.box_bound = jget(p, "box_bound", ps.box_bound);
    ps.min_dim = jget_sz(p, "min_dim", ps.min_dim);
    ps.gen_seed = jget_u(p, "gen_seed", ps.gen_seed);
    ps.poison_n = jget_sz(p, "poison_n", ps.poison_n);
    ps.poison_d = jget_sz(p, "poison_d", ps.poison_d);
    ps.noise_var = jget(p, "noise_var", ps.noise_var);
    ps.test_frac = jget(p, "test_frac", ps.test_frac);
    ps.poison_ratio = jget(p, "poison_ratio", ps.poison_ratio);
    ps.epsilon = jget(p, "epsilon", ps.epsilon);
    ps.theta_bound = jget(p, "theta_bound", ps.theta_bound);
    ps.split_seed = jget_u(p, "split_seed", ps.split_seed);
  }

  if (!j.contains("solvers") || j.at("solvers").empty()) {
    throw std::invalid_argument("experiment config: need at least one solver");
  }
  for (const json& s : j.at("solvers")) {
    SolverSpec spec;
    spec.label = jget_s(s, "label", "");
    SolverConfig& c = spec.config;
    c.scheme = scheme_from_name(jget_s(s, "scheme", "pvr_sgda"));
    if (spec.label.empty()) spec.label = scheme_name(c.scheme);
    c.eta_x = jget(s, "eta_x", 0.0);
    c.eta_y = jget(s, "eta_y", 0.0);
    c.rho = jget(s, "rho", 0.0);
    c.r = jget(s, "r", 0.0);
    c.p = jget(s, "p", 0.5);
    c.batch = jget_sz(s, "batch", 1);
    c.lambda = jget(s, "lambda", 0.0);
    c.snapshot_period = jget_sz(s, "snapshot_period", 0);
    c.zs_literal_init = jget_b(s, "zs_literal_init", false);
    c.coupled_batches = jget_b(s, "coupled_batches", true);
    c.iterations = jget_u(s, "iterations", 100);
    c.cadence = jget_u(s, "cadence", 0);  // 0 -> experiment cadence
    c.diag_estimator_error = jget_b(s, "diag_estimator_error", true);
    c.diag_potential = jget_b(s, "diag_potential", false);
    c.residual_eta = jget(s, "residual_eta", 0.0);
    c.resum_period = jget_u(s, "resum_period", 1024);
    spec.use_theory_steps = jget_b(s, "use_theory_steps", false);
    spec.theory_a = jget(s, "a", 2.0);
    spec.theory_r_factor = jget(s, "r_factor", 2.0);
    spec.rho_sqrt_t_coeff = jget(s, "rho_sqrt_t_coeff", 0.0);
    cfg.solvers.push_back(std::move(spec));
  }

  // referenced files must exist at load time
  if ((cfg.problem.name == "robust_logistic" && cfg.problem.data_path.empty())) {
    throw std::invalid_argument("experiment config: robust_logistic needs a data path");
  }
  if (!cfg.problem.data_path.empty() && !fs::exists(cfg.problem.data_path)) {
    throw std::invalid_argument("experiment config: data file not found: " +
                                cfg.problem.data_path);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j = json::parse(in);
  ExperimentConfig cfg = parse_experiment_config(j);
  if (const char* env = std::getenv("NCC_SEED")) {
    cfg.master_seed = std::strtoull(env, nullptr, 10);
  }
  return cfg;
}

ProblemBundle build_problem(const ProblemSpec& spec) {
  ProblemBundle bundle;
  if (spec.name == "toy_bilinear") {
    ToyBilinearProblem::Params params;
    params.dim_x = spec.dim_x;
    params.dim_y = spec.dim_y;
    params.n = spec.n;
    params.c = spec.c;
    params.scale = spec.scale;
    params.noise = spec.noise;
    params.structure = spec.structure == "orthogonal"
                           ? ToyBilinearProblem::Structure::Orthogonal
                           : ToyBilinearProblem::Structure::Gaussian;
    params.seed = spec.instance_seed;
    params.box_halfwidth = spec.box_halfwidth;
    bundle.problem =
        std::make_unique<ToyBilinearProblem>(ToyBilinearProblem::random(params));
    return bundle;
  }
  if (spec.name == "robust_logistic") {
    Dataset ds = load_libsvm(spec.data_path, spec.min_dim);
    if (spec.subsample > 0 && spec.subsample < ds.n) {
      ds = subsample(ds, spec.subsample, spec.subsample_seed);
    }
    RobustLogisticProblem::Options opts;
    opts.lambda2 = spec.lambda2;
    opts.alpha = spec.alpha;
    opts.lambda1_enabled = spec.lambda1_enabled;
    opts.lambda1 = spec.lambda1;
    opts.box_bound = spec.box_bound;
    bundle.problem =
        std::make_unique<RobustLogisticProblem>(std::move(ds), opts);
    bundle.surrogate_box = true;
    return bundle;
  }
  if (spec.name == "data_poison") {
    PoisonData pd = spec.data_path.empty()
                        ? gen_poison_data(spec.gen_seed, spec.poison_n,
                                          spec.poison_d, spec.noise_var)
                        : load_poison_json(spec.data_path);
    PoisonSplit split =
        split_poison(pd.data, spec.split_seed, spec.test_frac, spec.poison_ratio);
    PoisonProblem::Options opts;
    opts.epsilon = spec.epsilon;
    opts.theta_bound = spec.theta_bound;
    bundle.problem = std::make_unique<PoisonProblem>(std::move(split.tr1),
                                                     std::move(split.tr2), opts);
    bundle.test_set = std::move(split.test);
    bundle.theta_star = std::move(pd.theta_star);
    bundle.surrogate_box = true;
    return bundle;
  }
  throw std::invalid_argument("unknown problem: " + spec.name);
}

ResolvedRun resolve_solver(const SolverSpec& spec, const MinimaxProblem& problem,
                           std::uint64_t master_seed, std::uint64_t seed) {
  ResolvedRun out;
  SolverConfig& cfg = out.config;
  cfg = spec.config;
  cfg.seed = master_seed;
  cfg.run_id = fnv1a(spec.label + "#" + std::to_string(seed));

  const double L_raw = problem.lipschitz_estimate();
  const double L = std::max(L_raw, 1.0);
  const double d_y = problem.set_y().diameter();
  out.manifest_extra["L_estimate"] = L_raw;
  out.manifest_extra["D_Y"] = d_y;

  const bool smoothed =
      cfg.scheme == Scheme::PvrSgda || cfg.scheme == Scheme::ZeroSarahSgda;
  if (spec.use_theory_steps) {
    if (!smoothed) {
      throw std::invalid_argument(
          "use_theory_steps applies only to the smoothed VR schemes");
    }
    const double r = cfg.r > 0.0 ? cfg.r : spec.theory_r_factor * L;
    StepSizeResult ss =
        cfg.scheme == Scheme::PvrSgda
            ? pvr_step_sizes(L_raw, cfg.p, r, d_y)
            : zerosarah_step_sizes(L_raw, problem.components(), spec.theory_a,
                                   r, d_y);
    cfg.eta_x = ss.eta_x;
    cfg.eta_y = ss.eta_y;
    cfg.rho = ss.rho;
    cfg.r = r;
    if (cfg.scheme == Scheme::ZeroSarahSgda) {
      cfg.batch = ss.constants.b;
      cfg.lambda = ss.constants.lambda;
    }
    out.manifest_extra["theory"] = {
        {"eta_x_bound", ss.eta_x},   {"eta_y_bound", ss.eta_y},
        {"rho_bound", ss.rho},       {"gamma", ss.constants.gamma},
        {"tau", ss.constants.tau},   {"omega", ss.constants.omega},
        {"sigma1", ss.constants.sigma1}, {"sigma2", ss.constants.sigma2},
        {"kappa", ss.constants.kappa},   {"warnings", ss.warnings}};
  } else if (smoothed && cfg.r <= 0.0) {
    cfg.r = spec.theory_r_factor * L;
  }
  if (spec.rho_sqrt_t_coeff > 0.0 && smoothed) {
    const double cap =
        spec.rho_sqrt_t_coeff /
        std::sqrt(std::max<double>(1.0, static_cast<double>(cfg.iterations)));
    cfg.rho = std::min(cfg.rho, cap);
    out.manifest_extra["rho_sqrt_t"] = cfg.rho;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace CSV

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace,
                     bool with_accuracy) {
  out << "schema=1\n";
  out << "t,oracle_count,diag_oracle_count,primal,res_x,res_y,err_x,err_y,phi,"
         "wall_s";
  if (with_accuracy) out << ",accuracy";
  out << "\n";
  for (const TraceRecord& r : trace) {
    out << r.t << ',' << r.oracle_count << ',' << r.diag_oracle_count << ','
        << fmt17(r.primal) << ',' << fmt17(r.res_x) << ',' << fmt17(r.res_y)
        << ',' << fmt17(r.err_x) << ',' << fmt17(r.err_y) << ','
        << fmt17(r.phi) << ',' << fmt17(r.wall_s);
    if (with_accuracy) out << ',' << fmt17(r.accuracy);
    out << '\n';
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in, bool* has_accuracy) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("schema=1", 0) != 0) {
    throw std::runtime_error("trace csv: bad or missing schema line");
  }
  if (!std::getline(in, line)) throw std::runtime_error("trace csv: no header");
  const bool acc = line.find(",accuracy") != std::string::npos;
  if (has_accuracy) *has_accuracy = acc;
  std::vector<TraceRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ls, tok, ',')) toks.push_back(tok);
    if (toks.size() < 10) throw std::runtime_error("trace csv: short row");
    TraceRecord r;
    r.t = std::strtoull(toks[0].c_str(), nullptr, 10);
    r.oracle_count = std::strtoull(toks[1].c_str(), nullptr, 10);
    r.diag_oracle_count = std::strtoull(toks[2].c_str(), nullptr, 10);
    r.primal = std::strtod(toks[3].c_str(), nullptr);
    r.res_x = std::strtod(toks[4].c_str(), nullptr);
    r.res_y = std::strtod(toks[5].c_str(), nullptr);
    r.err_x = std::strtod(toks[6].c_str(), nullptr);
    r.err_y = std::strtod(toks[7].c_str(), nullptr);
    r.phi = std::strtod(toks[8].c_str(), nullptr);
    r.wall_s = std::strtod(toks[9].c_str(), nullptr);
    if (acc && toks.size() > 10) r.accuracy = std::strtod(toks[10].c_str(), nullptr);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// run_experiment

namespace {

json config_to_json(const SolverConfig& c) {
  return {{"scheme", scheme_name(c.scheme)},
          {"eta_x", c.eta_x},
          {"eta_y", c.eta_y},
          {"rho", c.rho},
          {"r", c.r},
          {"p", c.p},
          {"batch", c.batch},
          {"lambda", c.lambda},
          {"snapshot_period", c.snapshot_period},
          {"zs_literal_init", c.zs_literal_init},
          {"coupled_batches", c.coupled_batches},
          {"iterations", c.iterations},
          {"seed", c.seed},
          {"run_id", c.run_id},
          {"cadence", c.cadence},
          {"diag_estimator_error", c.diag_estimator_error},
          {"diag_potential", c.diag_potential},
          {"residual_eta", c.residual_eta},
          {"resum_period", c.resum_period},
          {"init_policy", "x0 = P_X(0); y0 = set center; z0 = x0"}};
}

json problem_to_json(const ProblemSpec& s, const MinimaxProblem& p) {
  json j = {{"name", s.name},
            {"components", p.components()},
            {"dim_x", p.dim_x()},
            {"dim_y", p.dim_y()}};
  if (s.name == "toy_bilinear") {
    j["c"] = s.c;
    j["scale"] = s.scale;
    j["noise"] = s.noise;
    j["structure"] = s.structure;
    j["instance_seed"] = s.instance_seed;
    j["box_halfwidth"] = s.box_halfwidth;
  } else if (s.name == "robust_logistic") {
    j["data"] = s.data_path;
    j["subsample"] = s.subsample;
    j["subsample_seed"] = s.subsample_seed;
    j["lambda2"] = s.lambda2;
    j["alpha"] = s.alpha;
    j["lambda1_enabled"] = s.lambda1_enabled;
    j["lambda1"] = s.lambda1;
    j["box_bound"] = s.box_bound;
  } else if (s.name == "data_poison") {
    j["data"] = s.data_path;
    j["gen_seed"] = s.gen_seed;
    j["poison_n"] = s.poison_n;
    j["poison_d"] = s.poison_d;
    j["noise_var"] = s.noise_var;
    j["test_frac"] = s.test_frac;
    j["poison_ratio"] = s.poison_ratio;
    j["epsilon"] = s.epsilon;
    j["theta_bound"] = s.theta_bound;
    j["split_seed"] = s.split_seed;
  }
  return j;
}

struct Job {
  std::size_t solver_idx;
  std::uint64_t seed;
};

}  // namespace

int run_experiment(const ExperimentConfig& config) {
  ProblemBundle bundle = build_problem(config.problem);
  const MinimaxProblem& problem = *bundle.problem;

  fs::create_directories(config.out_dir);

  std::vector<Job> jobs;
  for (std::size_t si = 0; si < config.solvers.size(); ++si) {
    for (std::uint64_t seed : config.seeds) jobs.push_back({si, seed});
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::vector<std::string> errors;

  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= jobs.size()) return;
      const Job& job = jobs[idx];
      const SolverSpec& spec = config.solvers[job.solver_idx];
      try {
        ResolvedRun resolved =
            resolve_solver(spec, problem, config.master_seed, job.seed);
        SolverConfig cfg = resolved.config;
        if (cfg.cadence == 0) cfg.cadence = config.cadence;
        cfg.track_timing = config.timing;

        RunHooks hooks;
        if (bundle.test_set) {
          const Dataset& test = *bundle.test_set;
          hooks.accuracy = [&test](ConstView theta) {
            return poison_accuracy(test, theta);
          };
        }
        if (cfg.diag_potential) {
          TheoryConstants tc;
          tc.L = std::max(problem.lipschitz_estimate(), 1.0);
          tc.r = cfg.r;
          tc.p = cfg.p;
          if (cfg.scheme == Scheme::ZeroSarahSgda) {
            const double lam =
                cfg.lambda > 0.0 ? cfg.lambda : 1.0 / static_cast<double>(cfg.batch);
            tc.lambda = lam;
            tc.gamma = 2.0 / lam + 2.0 / (5.0 * lam * tc.L);
            tc.tau = 2.0 * tc.gamma * lam * lam;
          } else {
            tc.gamma = 4.0 + 2.0 / tc.L;
          }
          hooks.potential = make_potential_hook(tc).potential;
        }

        RunResult result = run_solver(problem, cfg, hooks);

        const std::string stem =
            sanitize(spec.label) + "_seed" + std::to_string(job.seed);
        {
          std::ofstream csv(fs::path(config.out_dir) / (stem + ".csv"));
          write_trace_csv(csv, result.trace, bundle.test_set.has_value());
        }
        json manifest;
        manifest["schema"] = 1;
        manifest["label"] = spec.label;
        manifest["seed"] = job.seed;
        manifest["master_seed"] = config.master_seed;
        manifest["problem"] = problem_to_json(config.problem, problem);
        manifest["solver"] = config_to_json(cfg);
        manifest["derived"] = resolved.manifest_extra;
        const TraceRecord& last = result.trace.back();
        manifest["results"] = {
            {"iterations", cfg.iterations},
            {"oracle_count", result.counters.algo},
            {"diag_oracle_count", result.counters.diag},
            {"expected_oracle_count", result.expected_oracle_count},
            {"counter_match",
             result.counters.algo == result.expected_oracle_count},
            {"heads", result.heads},
            {"tails", result.tails},
            {"snapshot_refreshes", result.snapshot_refreshes},
            {"best_t", result.best_t},
            {"best_residual", result.best_residual},
            {"final_res_x", last.res_x},
            {"final_res_y", last.res_y},
            {"box_touch_count", result.box_touch_count}};
        if (!std::isnan(last.primal)) manifest["results"]["final_primal"] = last.primal;
        if (!std::isnan(last.accuracy)) {
          manifest["results"]["final_accuracy"] = last.accuracy;
        }
        manifest["wall_seconds"] = result.wall_seconds;
        manifest["timestamp"] =
            static_cast<std::int64_t>(std::time(nullptr));
        if (bundle.surrogate_box && result.box_touch_count > 0) {
          manifest["warnings"] = {
              "iterates touched a surrogate box bound " +
              std::to_string(result.box_touch_count) +
              " times; consider enlarging box_bound/theta_bound"};
          std::lock_guard<std::mutex> lk(err_mutex);
          std::cerr << "[warn] " << spec.label << " seed " << job.seed
                    << ": surrogate box bound touched "
                    << result.box_touch_count << " times\n";
        }
        std::ofstream mf(fs::path(config.out_dir) / (stem + ".manifest.json"));
        mf << manifest.dump(2) << "\n";
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(err_mutex);
        errors.push_back(spec.label + " seed " + std::to_string(job.seed) +
                         ": " + e.what());
      }
    }
  };

  const std::size_t nthreads =
      std::max<std::size_t>(1, std::min(config.workers, jobs.size()));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const std::string& e : errors) std::cerr << "[error] " << e << "\n";
  return errors.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// compare

CompareResult compare_runs(const std::string& dir,
                           const std::vector<double>& thresholds) {
  CompareResult result;
  result.thresholds = thresholds;

  struct Acc {
    std::vector<double> finals, bests, primals, accs, walls;
    std::vector<std::vector<double>> to_threshold;
  };
  std::map<std::string, Acc> by_label;

  std::vector<fs::path> manifests;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 14 &&
        name.substr(name.size() - 14) == ".manifest.json") {
      manifests.push_back(entry.path());
    }
  }
  if (manifests.empty()) {
    throw std::runtime_error("compare: no run manifests in " + dir);
  }
  std::sort(manifests.begin(), manifests.end());

  for (const fs::path& mp : manifests) {
    std::ifstream mf(mp);
    json manifest = json::parse(mf);
    const std::string label = manifest.at("label").get<std::string>();
    std::string stem = mp.filename().string();
    stem = stem.substr(0, stem.size() - 14);
    std::ifstream csv(fs::path(dir) / (stem + ".csv"));
    if (!csv) throw std::runtime_error("compare: missing trace for " + stem);
    bool has_acc = false;
    std::vector<TraceRecord> trace = read_trace_csv(csv, &has_acc);
    if (trace.empty()) continue;

    Acc& acc = by_label[label];
    acc.to_threshold.resize(thresholds.size());
    const TraceRecord& last = trace.back();
    acc.finals.push_back(std::max(last.res_x, last.res_y));
    double best = std::numeric_limits<double>::infinity();
    for (const TraceRecord& r : trace) {
      best = std::min(best, std::max(r.res_x, r.res_y));
    }
    acc.bests.push_back(best);
    if (!std::isnan(last.primal)) acc.primals.push_back(last.primal);
    if (has_acc && !std::isnan(last.accuracy)) acc.accs.push_back(last.accuracy);
    acc.walls.push_back(jget(manifest, "wall_seconds", 0.0));
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
      double reached = std::numeric_limits<double>::infinity();
      for (const TraceRecord& r : trace) {
        if (std::max(r.res_x, r.res_y) <= thresholds[ti]) {
          reached = static_cast<double>(r.oracle_count);
          break;
        }
      }
      acc.to_threshold[ti].push_back(reached);
    }
  }

  auto mean_of = [](const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto std_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    if (std::isinf(m) || std::isnan(m)) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };

  for (auto& [label, acc] : by_label) {
    CompareRow row;
    row.label = label;
    row.runs = acc.finals.size();
    row.final_res_mean = mean_of(acc.finals);
    row.final_res_std = std_of(acc.finals);
    row.best_res_mean = mean_of(acc.bests);
    row.best_res_std = std_of(acc.bests);
    row.final_primal_mean = mean_of(acc.primals);
    row.final_accuracy_mean = mean_of(acc.accs);
    row.wall_mean = mean_of(acc.walls);
    for (auto& tt : acc.to_threshold) row.oracle_to_threshold.push_back(mean_of(tt));
    result.rows.push_back(std::move(row));
  }
  return result;
}

void write_compare_csv(std::ostream& out, const CompareResult& result) {
  out << "label,runs,final_res_mean,final_res_std,best_res_mean,best_res_std,"
         "final_primal,final_accuracy,wall_s";
  for (double t : result.thresholds) out << ",oracle_to_" << t;
  out << "\n";
  for (const CompareRow& r : result.rows) {
    out << r.label << ',' << r.runs << ',' << fmt17(r.final_res_mean) << ','
        << fmt17(r.final_res_std) << ',' << fmt17(r.best_res_mean) << ','
        << fmt17(r.best_res_std) << ',' << fmt17(r.final_primal_mean) << ','
        << fmt17(r.final_accuracy_mean) << ',' << fmt17(r.wall_mean);
    for (double v : r.oracle_to_threshold) {
      out << ',' << (std::isinf(v) ? "inf" : fmt17(v));
    }
    out << "\n";
  }
}

void print_compare_table(std::ostream& out, const CompareResult& result) {
  auto num = [](double v, int prec = 4) {
    if (std::isnan(v)) return std::string("-");
    if (std::isinf(v)) return std::string("∞");
    std::ostringstream ss;
    ss << std::setprecision(prec) << std::scientific << v;
    return ss.str();
  };
  out << std::left << std::setw(24) << "solver" << std::setw(6) << "runs"
      << std::setw(26) << "final max-res (mean+/-sd)" << std::setw(26)
      << "best max-res (mean+/-sd)" << std::setw(14) << "primal"
      << std::setw(12) << "accuracy" << std::setw(10) << "wall[s]";
  for (double t : result.thresholds) {
    std::ostringstream ss;
    ss << "oracle@" << t;
    out << std::setw(14) << ss.str();
  }
  out << "\n";
  for (const CompareRow& r : result.rows) {
    out << std::left << std::setw(24) << r.label << std::setw(6) << r.runs
        << std::setw(26) << (num(r.final_res_mean) + "+/-" + num(r.final_res_std, 1))
        << std::setw(26) << (num(r.best_res_mean) + "+/-" + num(r.best_res_std, 1))
        << std::setw(14) << num(r.final_primal_mean) << std::setw(12)
        << num(r.final_accuracy_mean, 3) << std::setw(10)
        << num(r.wall_mean, 2);
    for (double v : r.oracle_to_threshold) out << std::setw(14) << num(v, 3);
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// poison dataset files

void save_poison_json(const std::string& path, const PoisonData& pd,
                      std::uint64_t seed, double noise_var) {
  json j;
  j["task"] = "poison";
  j["seed"] = seed;
  j["noise_var"] = noise_var;
  j["n"] = pd.data.n;
  j["d"] = pd.data.d;
  j["theta_star"] = pd.theta_star;
  j["labels"] = pd.data.labels;
  std::vector<std::vector<double>> rows(pd.data.n);
  for (std::size_t i = 0; i < pd.data.n; ++i) rows[i] = pd.data.dense_row(i);
  j["features"] = rows;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump() << "\n";
}

PoisonData load_poison_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  json j = json::parse(f);
  PoisonData pd;
  const std::size_t n = j.at("n").get<std::size_t>();
  const std::size_t d = j.at("d").get<std::size_t>();
  pd.theta_star = j.at("theta_star").get<Vec>();
  Dataset& ds = pd.data;
  ds.n = n;
  ds.d = d;
  ds.labels = j.at("labels").get<std::vector<std::int8_t>>();
  const auto rows = j.at("features").get<std::vector<std::vector<double>>>();
  ds.row_ptr.resize(n + 1);
  ds.col.resize(n * d);
  ds.val.resize(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    ds.row_ptr[i] = i * d;
    for (std::size_t k = 0; k < d; ++k) {
      ds.col[i * d + k] = static_cast<std::uint32_t>(k);
      ds.val[i * d + k] = rows[i][k];
    }
  }
  ds.row_ptr[n] = n * d;
  return pd;
}

}  // namespace ncc

// ncc: stochastic smoothed gradient descent-ascent solvers for finite-sum
// nonconvex-concave minimax problems.
//
//   ncc run      --config cfg.json [--out dir] [--workers N]
//   ncc compare  --dir dir [--thresholds 0.1 0.01]
//   ncc check    --suite {projections,estimators,descent} [--out report.json]
//   ncc gen-data --task poison --seed S --out file [--n N --d D --noise-var V]
//   ncc params   --scheme {pvr,zerosarah} --L v [--p v | --a v --n v] [--r v] [--dy v]

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncc/harness.hpp"
#include "ncc/verify.hpp"

using nlohmann::json;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& data_path, std::size_t workers) {
  ncc::ExperimentConfig cfg = ncc::load_experiment_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!data_path.empty()) cfg.problem.data_path = data_path;
  if (workers > 0) cfg.workers = workers;
  return ncc::run_experiment(cfg);
}

int cmd_compare(const std::string& dir, const std::vector<double>& thresholds) {
  ncc::CompareResult result = ncc::compare_runs(dir, thresholds);
  ncc::print_compare_table(std::cout, result);
  std::ofstream csv(std::filesystem::path(dir) / "compare.csv");
  ncc::write_compare_csv(csv, result);
  std::cout << "wrote " << (std::filesystem::path(dir) / "compare.csv").string()
            << "\n";
  return 0;
}

int cmd_check(const std::string& suite, const std::string& out_path,
              std::uint64_t seed, std::size_t draws, std::size_t replicas) {
  json report;
  bool passed = false;
  if (suite == "projections") {
    auto r = ncc::verify::run_projection_suite(seed);
    report = ncc::verify::to_json(r);
    passed = r.passed;
  } else if (suite == "estimators") {
    auto r = ncc::verify::run_estimator_recursion_suite(seed, draws);
    report = ncc::verify::to_json(r);
    passed = r.passed;
  } else if (suite == "descent") {
    auto r = ncc::verify::run_descent_suite(seed, replicas);
    report = ncc::verify::to_json(r);
    passed = r.passed;
  } else {
    std::cerr << "unknown suite: " << suite << "\n";
    return 2;
  }
  std::cout << report.dump(2) << "\n";
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    f << report.dump(2) << "\n";
  }
  return passed ? 0 : 1;
}

int cmd_gen_data(const std::string& task, std::uint64_t seed,
                 const std::string& out, std::size_t n, std::size_t d,
                 double noise_var) {
  if (task != "poison") {
    std::cerr << "unknown task: " << task << "\n";
    return 2;
  }
  ncc::PoisonData pd = ncc::gen_poison_data(seed, n, d, noise_var);
  ncc::save_poison_json(out, pd, seed, noise_var);
  std::cout << "wrote " << out << " (n=" << pd.data.n << ", d=" << pd.data.d
            << ")\n";
  return 0;
}

int cmd_params(const std::string& scheme, double L, double p, double a,
               std::size_t n, double r, double dy) {
  if (r <= 0.0) r = 2.0 * std::max(L, 1.0);
  ncc::StepSizeResult ss;
  if (scheme == "pvr") {
    ss = ncc::pvr_step_sizes(L, p, r, dy);
  } else if (scheme == "zerosarah") {
    if (n == 0) {
      std::cerr << "zerosarah params need --n\n";
      return 2;
    }
    ss = ncc::zerosarah_step_sizes(L, n, a, r, dy);
  } else {
    std::cerr << "unknown scheme: " << scheme << "\n";
    return 2;
  }
  json j = {{"scheme", scheme},
            {"eta_x", ss.eta_x},
            {"eta_y", ss.eta_y},
            {"rho", ss.rho},
            {"constants",
             {{"L", ss.constants.L},
              {"r", ss.constants.r},
              {"gamma", ss.constants.gamma},
              {"tau", ss.constants.tau},
              {"sigma1", ss.constants.sigma1},
              {"sigma2", ss.constants.sigma2},
              {"omega", ss.constants.omega},
              {"L_d", ss.constants.L_d},
              {"kappa", ss.constants.kappa},
              {"b", ss.constants.b},
              {"lambda", ss.constants.lambda}}},
            {"warnings", ss.warnings}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-loop variance-reduced solvers for nonconvex-concave "
               "finite-sum minimax problems"};
  app.require_subcommand(1);

  std::string config_path, out_dir, dir, data_path, suite = "projections";
  std::string out_path, task = "poison", scheme = "pvr";
  std::vector<double> thresholds = {1e-1, 1e-2};
  std::size_t workers = 0, draws = 100000, replicas = 100;
  std::uint64_t seed = 1;
  std::size_t gen_n = 1000, gen_d = 100, zs_n = 0;
  double noise_var = 1e-3, L = 1.0, p = 0.5, a = 2.0, r = 0.0;
  double dy = std::sqrt(2.0);

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--data", data_path, "dataset path override");
  run->add_option("--workers", workers, "concurrent runs");

  CLI::App* compare = app.add_subcommand("compare", "summarize a run directory");
  compare->add_option("--dir", dir, "run directory")->required();
  compare->add_option("--thresholds", thresholds, "residual thresholds");

  CLI::App* check = app.add_subcommand("check", "Monte-Carlo verification suites");
  check->add_option("--suite", suite, "projections|estimators|descent")
      ->required();
  check->add_option("--out", out_path, "write JSON report here");
  check->add_option("--seed", seed, "suite seed");
  check->add_option("--draws", draws, "estimator draws per state");
  check->add_option("--replicas", replicas, "descent replicas");

  CLI::App* gen = app.add_subcommand("gen-data", "synthetic dataset generator");
  gen->add_option("--task", task, "poison")->required();
  gen->add_option("--seed", seed, "generator seed")->required();
  gen->add_option("--out", out_path, "output file")->required();
  gen->add_option("--n", gen_n, "sample count");
  gen->add_option("--d", gen_d, "feature dimension");
  gen->add_option("--noise-var", noise_var, "label noise variance");

  CLI::App* params = app.add_subcommand("params", "theory step-size bounds");
  params->add_option("--scheme", scheme, "pvr|zerosarah")->required();
  params->add_option("--L", L, "smoothness constant")->required();
  params->add_option("--p", p, "full-gradient probability (pvr)");
  params->add_option("--a", a, "batch multiplier (zerosarah)");
  params->add_option("--n", zs_n, "component count (zerosarah)");
  params->add_option("--r", r, "smoothing weight (default 2L)");
  params->add_option("--dy", dy, "dual diameter (default sqrt(2))");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, data_path, workers);
    if (compare->parsed()) return cmd_compare(dir, thresholds);
    if (check->parsed()) return cmd_check(suite, out_path, seed, draws, replicas);
    if (gen->parsed()) {
      return cmd_gen_data(task, seed, out_path, gen_n, gen_d, noise_var);
    }
    if (params->parsed()) return cmd_params(scheme, L, p, a, zs_n, r, dy);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

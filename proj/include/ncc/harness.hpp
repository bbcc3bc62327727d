#pragma once

// Experiment orchestration: JSON configuration, per-(solver, seed) runs
// with CSV traces and JSON manifests, and the cross-run comparison table.
//
// Determinism contract: a rerun with the same resolved configuration
// produces byte-identical CSV traces. Wall-clock readings therefore live
// in the manifest; the wall_s trace column stays zero unless timing is
// explicitly enabled.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncc/data.hpp"
#include "ncc/solvers.hpp"
#include "ncc/theory.hpp"

namespace ncc {

struct ProblemSpec {
  std::string name = "toy_bilinear";  // toy_bilinear | robust_logistic | data_poison
  // toy_bilinear
  std::size_t dim_x = 5, dim_y = 5, n = 50;
  double c = 0.5, scale = 0.5, noise = 0.1;
  std::string structure = "gaussian";  // or "orthogonal"
  std::uint64_t instance_seed = 1;
  double box_halfwidth = 1.0;
  // robust_logistic
  std::string data_path;
  std::size_t subsample = 0;  // 0 = all rows
  std::uint64_t subsample_seed = 1;
  double lambda2 = 0.001, alpha = 10.0;
  bool lambda1_enabled = false;
  double lambda1 = 0.0;
  double box_bound = 100.0;
  std::size_t min_dim = 0;
  // data_poison
  std::uint64_t gen_seed = 1;
  std::size_t poison_n = 1000, poison_d = 100;
  double noise_var = 1e-3;
  double test_frac = 0.3;
  double poison_ratio = 0.10;
  double epsilon = 2.0;
  double theta_bound = 1e3;
  std::uint64_t split_seed = 1;
};

struct SolverSpec {
  std::string label;
  SolverConfig config;
  bool use_theory_steps = false;
  double theory_a = 2.0;        // ZeroSARAH batch multiplier
  double theory_r_factor = 2.0; // r = factor * L when r is not given
  double rho_sqrt_t_coeff = 0.0;  // if > 0: rho = min(bound, coeff/sqrt(T))
};

struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  std::string out_dir = "runs/out";
  std::uint64_t cadence = 1;
  std::size_t workers = 1;
  bool timing = false;
  std::vector<double> thresholds = {1e-1, 1e-2};
  ProblemSpec problem;
  std::vector<SolverSpec> solvers;
  std::vector<std::uint64_t> seeds = {1};
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Materialized problem plus the extra context some problems carry.
struct ProblemBundle {
  std::unique_ptr<MinimaxProblem> problem;
  std::optional<Dataset> test_set;   // poisoning
  std::optional<Vec> theta_star;     // poisoning
  bool surrogate_box = false;        // box bounds are compactness surrogates
};

ProblemBundle build_problem(const ProblemSpec& spec);

// Resolves theory-derived step sizes and defaults for one run; returns the
// fully resolved config plus manifest metadata.
struct ResolvedRun {
  SolverConfig config;
  nlohmann::json manifest_extra;  // derived constants, warnings
};
ResolvedRun resolve_solver(const SolverSpec& spec, const MinimaxProblem& problem,
                           std::uint64_t master_seed, std::uint64_t seed);

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace,
                     bool with_accuracy);
std::vector<TraceRecord> read_trace_csv(std::istream& in, bool* has_accuracy);

// Executes every (solver, seed) pair; returns nonzero on any failure.
int run_experiment(const ExperimentConfig& config);

struct CompareRow {
  std::string label;
  std::size_t runs = 0;
  double final_res_mean = 0.0, final_res_std = 0.0;
  double best_res_mean = 0.0, best_res_std = 0.0;
  double final_primal_mean = std::numeric_limits<double>::quiet_NaN();
  double final_accuracy_mean = std::numeric_limits<double>::quiet_NaN();
  double wall_mean = 0.0;
  // oracle count to reach each threshold on max(res_x, res_y); infinity
  // when never reached
  std::vector<double> oracle_to_threshold;
};

struct CompareResult {
  std::vector<double> thresholds;
  std::vector<CompareRow> rows;
};

CompareResult compare_runs(const std::string& dir,
                           const std::vector<double>& thresholds);
void write_compare_csv(std::ostream& out, const CompareResult& result);
void print_compare_table(std::ostream& out, const CompareResult& result);

// Poison dataset files written by `ncc gen-data` and accepted by run
// configs in place of on-the-fly generation.
void save_poison_json(const std::string& path, const PoisonData& pd,
                      std::uint64_t seed, double noise_var);
PoisonData load_poison_json(const std::string& path);

}  // namespace ncc

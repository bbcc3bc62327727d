#pragma once

// Monte-Carlo verification suites behind `ncc check` and the acceptance
// tests: simplex projection against a brute-force active-set oracle, the
// estimator-error recursions at fixed states, and the expected potential
// descent. Each suite returns a JSON-serializable report.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncc/theory.hpp"

namespace ncc::verify {

// Exact simplex projection by enumerating candidate active sets; O(2^d),
// independent of the sort-and-threshold implementation it certifies.
Vec brute_force_simplex_projection(ConstView p);

struct ProjectionSuiteResult {
  std::size_t cases = 0;
  double max_coord_error = 0.0;            // vs the brute-force oracle
  double max_optimality_violation = 0.0;   // ||P(p)-p|| <= ||q-p|| margin
  double max_nonexpansive_violation = 0.0;
  bool passed = false;
};

ProjectionSuiteResult run_projection_suite(std::uint64_t seed,
                                           std::size_t cases_per_dim = 200);

// One Monte-Carlo estimator-recursion check at a fixed solver state.
struct RecursionCheck {
  std::string inequality;  // "pvr_x", "pvr_y", "zs_v", "zs_w", "zs_d", "zs_h"
  std::uint64_t state_t = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double stderr_ = 0.0;
  bool satisfied = false;
};

struct RecursionSuiteResult {
  std::vector<RecursionCheck> checks;
  std::size_t draws = 0;
  bool passed = false;
};

// Fixed states are taken from short PVR / ZeroSARAH runs on a desk-scale
// bilinear instance; each state is probed with `draws` independent
// estimator draws.
RecursionSuiteResult run_estimator_recursion_suite(std::uint64_t seed,
                                                   std::size_t draws = 100000);

struct DescentSuiteResult {
  DescentReport pvr;
  DescentReport zerosarah;
  std::size_t min_satisfied = 0;  // pass threshold per scheme
  bool passed = false;
};

DescentSuiteResult run_descent_suite(std::uint64_t seed,
                                     std::size_t replicas = 100,
                                     std::size_t probe_count = 10);

nlohmann::json to_json(const ProjectionSuiteResult& r);
nlohmann::json to_json(const RecursionSuiteResult& r);
nlohmann::json to_json(const DescentReport& r);
nlohmann::json to_json(const DescentSuiteResult& r);

}  // namespace ncc::verify

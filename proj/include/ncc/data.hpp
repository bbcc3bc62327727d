#pragma once

// Dataset ingestion: LIBSVM text parsing/serialization plus the synthetic
// generator and split used by the data-poisoning experiment.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncc/rng.hpp"
#include "ncc/vec.hpp"

namespace ncc {

// Sparse row-major feature matrix with one label per row. Labels are -1/+1
// for classification tasks and 0/1 for the poisoning task.
struct Dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::int8_t> labels;
  std::vector<std::uint64_t> row_ptr;  // size n+1
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  std::size_t row_nnz(std::size_t i) const { return row_ptr[i + 1] - row_ptr[i]; }
  Vec dense_row(std::size_t i) const;
  Dataset subset(const std::vector<std::uint32_t>& rows) const;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// LIBSVM text format: `label idx:val idx:val ...` with 1-based strictly
// increasing indices per line. Blank lines and `#` comment lines are
// skipped. Labels {0,-1} map to -1 and {1,+1} map to +1. The declared
// dimension is max(seen index, min_dim).
Dataset parse_libsvm(std::istream& in, std::size_t min_dim = 0);
Dataset load_libsvm(const std::string& path, std::size_t min_dim = 0);
void serialize_libsvm(const Dataset& ds, std::ostream& out);

// Deterministic row subsample without replacement.
Dataset subsample(const Dataset& ds, std::size_t m, std::uint64_t seed);

struct PoisonData {
  Dataset data;    // labels in {0,1}
  Vec theta_star;  // generator parameters
};

// z_i ~ N(0, I_d), nu_i ~ N(0, noise_var), t_i = 1{sigmoid(z_i'theta* + nu_i) > 0.5},
// theta* ~ N(0, I_d); everything drawn from the seeded stream.
PoisonData gen_poison_data(std::uint64_t seed, std::size_t n = 1000,
                           std::size_t d = 100, double noise_var = 1e-3);

struct PoisonSplit {
  Dataset tr1;   // poisoned subset
  Dataset tr2;   // clean training subset
  Dataset test;
  std::vector<std::uint32_t> tr1_rows, tr2_rows, test_rows;  // into the source
};

// Seeded shuffle, then |test| = floor(test_frac*n), |tr1| = floor(ratio*|train|).
PoisonSplit split_poison(const Dataset& ds, std::uint64_t seed,
                         double test_frac, double poison_ratio = 0.10);

}  // namespace ncc

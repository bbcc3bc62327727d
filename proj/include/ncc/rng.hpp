#pragma once

// Seeded random streams for the experiment harness. Streams are derived
// from (master_seed, run_id) by counter-style SplitMix64 mixing, so the
// same pair always reproduces the same draws and distinct run ids give
// statistically independent streams.
//
// All transformations (uniform mapping, Box-Muller normals, Bernoulli,
// partial Fisher-Yates batch sampling) are pinned here rather than taken
// from <random> distributions, which keeps traces bit-reproducible across
// standard libraries.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ncc {

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_id);
std::uint64_t fnv1a(std::string_view s);

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t run_id)
      : gen_(derive_seed(master_seed, run_id)) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe under log().
  double uniform_pos() { return 1.0 - uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal();

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  // Draw b distinct indices from [0, n) by partial Fisher-Yates on the
  // caller-owned scratch permutation (restored before returning). When
  // b == n the identity order is returned and no draws are consumed.
  void sample_without_replacement(std::size_t n, std::size_t b,
                                  std::vector<std::uint32_t>& out,
                                  std::vector<std::uint32_t>& scratch);

 private:
  std::mt19937_64 gen_;
  std::vector<std::uint32_t> swap_log_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace ncc

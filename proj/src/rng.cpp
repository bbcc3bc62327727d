#include "ncc/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ncc {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_id) {
  std::uint64_t s = master_seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (run_id + 0x9e3779b97f4a7c15ULL);
  std::uint64_t key = splitmix64(s);
  return key == 0 ? 0x1234567887654321ULL : key;
}

std::uint64_t fnv1a(std::string_view str) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : str) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double RngStream::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform_pos();
  double u2 = uniform();
  double mag = std::sqrt(-2.0 * std::log(u1));
  double ang = 2.0 * std::numbers::pi * u2;
  cached_normal_ = mag * std::sin(ang);
  have_cached_normal_ = true;
  return mag * std::cos(ang);
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Rejection sampling on the top multiple of n; unbiased and pinned.
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t v;
  do {
    v = gen_();
  } while (v >= limit);
  return v % n;
}

void RngStream::sample_without_replacement(std::size_t n, std::size_t b,
                                           std::vector<std::uint32_t>& out,
                                           std::vector<std::uint32_t>& scratch) {
  if (b == 0 || b > n) {
    throw std::invalid_argument("sample_without_replacement: need 0 < b <= n");
  }
  out.resize(b);
  if (b == n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint32_t>(i);
    return;
  }
  if (scratch.size() != n) {
    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      scratch[i] = static_cast<std::uint32_t>(i);
  }
  swap_log_.resize(b);
  for (std::size_t j = 0; j < b; ++j) {
    std::size_t k = j + static_cast<std::size_t>(uniform_index(n - j));
    swap_log_[j] = static_cast<std::uint32_t>(k);
    std::swap(scratch[j], scratch[k]);
    out[j] = scratch[j];
  }
  // Undo the partial shuffle so scratch stays the identity permutation.
  for (std::size_t j = b; j-- > 0;) std::swap(scratch[j], scratch[swap_log_[j]]);
}

}  // namespace ncc

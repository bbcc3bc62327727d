#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ncc/rng.hpp"

using namespace ncc;

TEST_CASE("identical (master_seed, run_id) reproduces the stream") {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100000; ++i) {
    REQUIRE(a.uniform() == b.uniform());
  }
}

TEST_CASE("distinct run ids decorrelate") {
  RngStream a(42, 1), b(42, 2);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) {
    if (a.uniform() == b.uniform()) ++equal;
  }
  CHECK(equal == 0);
}

TEST_CASE("bernoulli edge probabilities") {
  RngStream rng(1, 1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.bernoulli(1.0));
    CHECK(!rng.bernoulli(0.0));
  }
}

TEST_CASE("bernoulli(0.3) within binomial confidence bounds") {
  RngStream rng(123, 5);
  const int n = 1000000;
  int heads = 0;
  for (int i = 0; i < n; ++i) heads += rng.bernoulli(0.3);
  const double mean = static_cast<double>(heads) / n;
  const double se = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::abs(mean - 0.3) <= 3.0 * se);
}

TEST_CASE("normal moments") {
  RngStream rng(9, 3);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sumsq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sumsq / n - 1.0) < 0.02);
}

TEST_CASE("sample_without_replacement validity and uniformity") {
  RngStream rng(77, 1);
  std::vector<std::uint32_t> batch, scratch;
  std::vector<int> counts(10, 0);
  for (int rep = 0; rep < 30000; ++rep) {
    rng.sample_without_replacement(10, 3, batch, scratch);
    REQUIRE(batch.size() == 3);
    std::set<std::uint32_t> uniq(batch.begin(), batch.end());
    REQUIRE(uniq.size() == 3);
    for (auto i : batch) {
      REQUIRE(i < 10);
      counts[i]++;
    }
  }
  // each index appears with probability 3/10
  for (int c : counts) {
    const double freq = c / 30000.0;
    CHECK(std::abs(freq - 0.3) < 0.02);
  }
  // full batch returns identity order without consuming draws
  RngStream r1(5, 5), r2(5, 5);
  r1.sample_without_replacement(6, 6, batch, scratch);
  for (std::size_t i = 0; i < 6; ++i) CHECK(batch[i] == i);
  CHECK(r1.uniform() == r2.uniform());
}

TEST_CASE("invalid batch sizes throw") {
  RngStream rng(1, 1);
  std::vector<std::uint32_t> batch, scratch;
  CHECK_THROWS_AS(rng.sample_without_replacement(5, 0, batch, scratch),
                  std::invalid_argument);
  CHECK_THROWS_AS(rng.sample_without_replacement(5, 6, batch, scratch),
                  std::invalid_argument);
}

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "sketchls/rng.hpp"

using namespace sketchls;

TEST_CASE("engine streams are deterministic per seed") {
  rng::Engine a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    all_equal = all_equal && (x == b.next());
    any_diff = any_diff || (x != c.next());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform stays in [0,1) and covers the range") {
  rng::Engine eng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = eng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("bounded draws are unbiased across small ranges") {
  rng::Engine eng(11);
  const std::uint64_t bound = 7;
  std::vector<long> counts(bound, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) ++counts[eng.bounded(bound)];
  for (const long c : counts)
    CHECK(std::abs(c - draws / 7.0) < 5.0 * std::sqrt(draws / 7.0));
}

TEST_CASE("normal draws have the right first two moments") {
  rng::Engine eng(3);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = eng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("rademacher is a fair sign") {
  rng::Engine eng(5);
  long sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double s = eng.rademacher();
    CHECK(std::abs(s) == 1.0);
    sum += static_cast<long>(s);
  }
  CHECK(std::abs(sum) < 4 * static_cast<long>(std::sqrt(n)));
}

TEST_CASE("mix separates nearby keys") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t rep = 0; rep < 64; ++rep)
    for (std::uint64_t tag = 0; tag < 8; ++tag)
      seen.insert(rng::mix(123, rep, tag));
  CHECK(seen.size() == 64 * 8);
}

#include <set>

#include "doctest.h"
#include "svy/rng.hpp"

using svy::Stream;

TEST_CASE("streams are pure functions of their key path") {
  Stream a(42, {3, 7});
  Stream b(42, {3, 7});
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  CHECK(Stream(42, {3, 7}).key() != Stream(42, {7, 3}).key());
  CHECK(Stream(42, {3}).key() != Stream(43, {3}).key());
}

TEST_CASE("substreams do not depend on parent consumption") {
  Stream parent(5);
  const auto before = parent.substream(9).key();
  for (int i = 0; i < 10; ++i) parent.uniform();
  CHECK(parent.substream(9).key() == before);
  CHECK(parent.substream(9).key() != parent.substream(10).key());
}

TEST_CASE("index stays in range and covers it") {
  Stream s(1);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto k = s.index(7);
    REQUIRE(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("exponential draws have mean 1/rate") {
  Stream s(2);
  double total = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) total += s.exponential(10.0);
  // sd of the mean is 0.1 / sqrt(n)
  CHECK(std::abs(total / n - 0.1) < 4.0 * 0.1 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("label hash is stable") {
  CHECK(svy::label_hash("") == 0xcbf29ce484222325ULL);
  CHECK(svy::label_hash("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(svy::label_hash("lasso") != svy::label_hash("ridge"));
}

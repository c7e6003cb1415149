#include "elicit/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using elicit::CounterRng;

TEST_SUITE("rng") {
  TEST_CASE("same key replays the same stream") {
    CounterRng a(42), b(42);
    for (int k = 0; k < 1000; ++k) CHECK(a.next() == b.next());
    CHECK(a.counter() == 1000);
  }

  TEST_CASE("substreams depend on the template name") {
    auto a = CounterRng::substream(7, "poisson");
    auto b = CounterRng::substream(7, "normal");
    auto c = CounterRng::substream(8, "poisson");
    const auto x = a.next();
    CHECK(x != b.next());
    CHECK(x != c.next());
  }

  TEST_CASE("fnv1a64 reference values") {
    CHECK(elicit::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(elicit::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  }

  TEST_CASE("uniform stays in the open unit interval with mean 1/2") {
    CounterRng r(1);
    double sum = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const double u = r.uniform();
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
      sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
  }

  TEST_CASE("normal has zero mean and unit variance") {
    CounterRng r(2);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double z = r.normal();
      s1 += z;
      s2 += z * z;
    }
    CHECK(std::abs(s1 / n) < 3.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
  }
}

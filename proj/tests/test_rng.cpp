#include "doctest.h"
#include "ocs/rng.hpp"

#include <cmath>

using ocs::CounterRng;

TEST_CASE("counter rng is a pure function of key and counter") {
  CounterRng a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  CHECK(a.counter() == 100);

  // the i-th draw has a closed form
  CHECK(CounterRng(7)() == ocs::mix64(7 + 0x9e3779b97f4a7c15ULL));
}

TEST_CASE("derived streams separate every coordinate") {
  const auto base = ocs::derive_stream(1, 2, 3);
  CHECK(base == ocs::derive_stream(1, 2, 3));
  CHECK(base != ocs::derive_stream(2, 2, 3));
  CHECK(base != ocs::derive_stream(1, 3, 3));
  CHECK(base != ocs::derive_stream(1, 2, 4));
  CHECK(ocs::derive_stream(0, 1, 0) != ocs::derive_stream(0, 0, 1));
}

TEST_CASE("uniform and normal draws have the right moments") {
  CounterRng rng(99);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  double lo = 1, hi = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    su += u;
  }
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));

  CounterRng r2(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = r2.uniform(0.9, 1.1);
    CHECK(u >= 0.9);
    CHECK(u <= 1.1);
  }
}

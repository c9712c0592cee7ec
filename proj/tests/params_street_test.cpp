#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hyperfractal/params.hpp"
#include "hyperfractal/rng.hpp"
#include "hyperfractal/street.hpp"

using namespace hyperfractal;

TEST_CASE("parameters derived from the fractal dimension match hand values") {
  const HyperfractalParams mid = params_from_df(3.0, 1000);
  CHECK(mid.p == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mid.q == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mid.delta == doctest::Approx(0.5).epsilon(1e-14));

  const HyperfractalParams sparse = params_from_df(2.5, 1000);
  CHECK(sparse.p == doctest::Approx(0.2928932188134524).epsilon(1e-14));
  CHECK(sparse.q == doctest::Approx(0.7071067811865476).epsilon(1e-14));
  CHECK(sparse.delta == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  const HyperfractalParams dense = params_from_df(5.33, 1000);
  CHECK(dense.p == doctest::Approx(0.9005579395306351).epsilon(1e-13));
  CHECK(dense.q == doctest::Approx(0.09944206046936482).epsilon(1e-13));
  CHECK(dense.delta == doctest::Approx(0.23094688221709006).epsilon(1e-13));

  CHECK(df_from_q(mid.q) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(df_from_q(dense.q) == doctest::Approx(5.33).epsilon(1e-13));
}

TEST_CASE("the degenerate corners of the parameter space behave") {
  const HyperfractalParams cross = params_from_p(1.0, 10);
  CHECK(std::isinf(cross.d_f));
  CHECK(cross.delta == 0.0);
  cross.validate();

  const HyperfractalParams uniform = params_from_p(0.0, 10);
  CHECK(uniform.d_f == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(uniform.delta == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS((void)params_from_df(1.9, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)params_from_p(1.2, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)params_from_p(-0.1, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)params_from_df(3.0, -1), std::invalid_argument);

  HyperfractalParams broken = params_from_df(3.0, 10);
  broken.q = 0.3;  // p + q != 1
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
}

TEST_CASE("level intensities decay geometrically and exhaust the population") {
  const HyperfractalParams params = params_from_df(3.0, 200);
  CHECK(intensity_at_level(params, 0) == doctest::Approx(50.0).epsilon(1e-14));
  CHECK(intensity_at_level(params, 2) == doctest::Approx(3.125).epsilon(1e-14));

  // sum_l 2^(l+1) * lambda_l = n for the untruncated law.
  double total = 0.0;
  for (int l = 0; l < 60; ++l) {
    total += std::ldexp(2.0, l) * intensity_at_level(params, l);
  }
  CHECK(total == doctest::Approx(200.0).epsilon(1e-12));
  CHECK(street_probability_at_level(params, 0) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("street coordinates are the odd dyadic rationals") {
  const Street top{Orientation::kHorizontal, 0, 0};
  CHECK(top.coordinate() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(Street{Orientation::kVertical, 1, 0}.coordinate() == doctest::Approx(0.25));
  CHECK(Street{Orientation::kVertical, 1, 1}.coordinate() == doctest::Approx(0.75));
  CHECK(Street{Orientation::kHorizontal, 2, 3}.coordinate() == doctest::Approx(0.875));

  CHECK(streets_per_orientation(5) == 32);
  CHECK(streets_at_level(5) == 64);
  CHECK(cumulated_length_per_orientation(3) == doctest::Approx(15.0));
}

TEST_CASE("distance to the nearest perpendicular street is exact and bounded") {
  CHECK(nearest_perp_street_distance(0.5, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(nearest_perp_street_distance(0.3, 0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(nearest_perp_street_distance(0.05, 1) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(nearest_perp_street_distance(0.01, 2) == doctest::Approx(0.115).epsilon(1e-12));

  for (int level = 0; level <= 6; ++level) {
    const double cap = std::ldexp(1.0, -(level + 1));
    for (int i = 0; i <= 100; ++i) {
      const double x = i / 100.0;
      const double d = nearest_perp_street_distance(x, level);
      CHECK(d >= 0.0);
      CHECK(d <= cap + 1e-15);
    }
  }
}

TEST_CASE("the critical street depth matches hand-evaluated ceilings") {
  // ceil(log(n^0.9 * 0.25) / log 4) at d_F = 3: 3.34 -> 4 (n=800),
  // 2.44 -> 3 (n=200), 4.98 -> 5 (n=1e4).
  CHECK(critical_level(params_from_df(3.0, 800), 0.1) == 4);
  CHECK(critical_level(params_from_df(3.0, 200), 0.1) == 3);
  CHECK(critical_level(params_from_df(3.0, 10000), 0.1) == 5);
  // Radio-range variant uses exponent 1/2 - epsilon.
  CHECK(critical_level(params_from_df(3.0, 10000), 0.1, true) == 2);
  CHECK(critical_level(params_from_df(3.0, 800), 0.1, true) == 1);
  // Tiny populations push the level negative.
  CHECK_THROWS_AS((void)critical_level(params_from_df(3.0, 2), 0.1), std::domain_error);
}

TEST_CASE("the street grid enumerates both orientations in canonical order") {
  const StreetGrid grid(params_from_df(3.0, 100, 3));
  CHECK(grid.street_count() == 30);  // 2 * (2^4 - 1)
  const std::vector<Street> all = grid.enumerate();
  REQUIRE(all.size() == 30);
  CHECK(all.front().orientation == Orientation::kHorizontal);
  CHECK(all.front().level == 0);
  CHECK(all[15].orientation == Orientation::kVertical);
  std::set<Street> unique(all.begin(), all.end());
  CHECK(unique.size() == all.size());
  for (const Street& s : all) {
    CHECK(s.coordinate() > 0.0);
    CHECK(s.coordinate() < 1.0);
  }
}

TEST_CASE("street hashing distinguishes neighbours") {
  const StreetHash hash;
  const Street a{Orientation::kHorizontal, 3, 2};
  const Street b{Orientation::kVertical, 3, 2};
  const Street c{Orientation::kHorizontal, 3, 3};
  CHECK(hash(a) == hash(Street{Orientation::kHorizontal, 3, 2}));
  CHECK(hash(a) != hash(b));
  CHECK(hash(a) != hash(c));
}

TEST_CASE("the random source is reproducible and statistically sane") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 5; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng first = Rng::for_replication(7, 0);
  Rng second = Rng::for_replication(7, 1);
  CHECK(first.next_u64() != second.next_u64());

  Rng u(2024);
  double total = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = u.uniform01();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    total += x;
  }
  CHECK(total / 20000.0 == doctest::Approx(0.5).epsilon(0.02));

  std::set<std::int64_t> seen;
  Rng d(5);
  bool up = false;
  bool down = false;
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t v = d.uniform_int(10);
    CHECK(v >= 0);
    CHECK(v < 10);
    seen.insert(v);
    const int dir = d.direction();
    if (dir == 1) up = true;
    if (dir == -1) down = true;
  }
  CHECK(seen.size() == 10);
  CHECK(up);
  CHECK(down);
}

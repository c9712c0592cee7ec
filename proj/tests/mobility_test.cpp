#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hyperfractal/mobility.hpp"
#include "hyperfractal/rng.hpp"

using namespace hyperfractal;

namespace {

MobileNode make_node(double position, int direction, double speed) {
  MobileNode node;
  node.id = 0;
  node.position = position;
  node.direction = direction;
  node.speed = speed;
  return node;
}

}  // namespace

TEST_CASE("billiard motion follows the hand-traced fold") {
  const MobileNode up = make_node(0.5, 1, 0.25);

  MotionState s = position_at(up, 0.0);
  CHECK(s.position == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.direction == 1);

  s = position_at(up, 1.0);  // 0.5 -> 0.75, still rising
  CHECK(s.position == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.direction == 1);

  s = position_at(up, 3.0);  // bounced at 1 (t=2), back down to 0.75
  CHECK(s.position == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.direction == -1);

  s = position_at(up, 8.0);  // one full period 2/v
  CHECK(s.position == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.direction == 1);

  const MobileNode down = make_node(0.5, -1, 0.25);
  s = position_at(down, 3.0);  // bounced at 0 (t=2), rising again
  CHECK(s.position == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s.direction == 1);
}

TEST_CASE("crossing times enumerate the exact billiard schedule") {
  // Hand trace: from 0.5 moving down at v=0.25, coordinate 0.75 is first hit
  // after the bounce at zero: t=5, then 7, and 8-periodically after.
  const MobileNode down = make_node(0.5, -1, 0.25);
  const std::vector<double> expected_down = {5.0, 7.0, 13.0, 15.0, 21.0, 23.0};
  double t = 0.0;
  for (double want : expected_down) {
    t = next_crossing_after(down, 0.75, t);
    CHECK(t == doctest::Approx(want).epsilon(1e-12));
    const MotionState at = position_at(down, t);
    CHECK(at.position == doctest::Approx(0.75).epsilon(1e-12));
  }

  const MobileNode up = make_node(0.5, 1, 0.25);
  const std::vector<double> expected_up = {1.0, 3.0, 9.0, 11.0};
  t = 0.0;
  for (double want : expected_up) {
    t = next_crossing_after(up, 0.75, t);
    CHECK(t == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("a node at the coordinate still gets a strictly future crossing") {
  const MobileNode node = make_node(0.75, 1, 0.25);
  const double t = next_crossing_after(node, 0.75, 0.0);
  CHECK(t > 0.0);
  CHECK(t == doctest::Approx(2.0).epsilon(1e-12));  // reflect at 1, come back
}

TEST_CASE("every interior coordinate is crossed exactly twice per period") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const MobileNode node =
        make_node(rng.uniform01(), rng.direction(), rng.uniform(0.05, 1.0));
    const double coordinate = rng.uniform(0.01, 0.99);
    const double period = 2.0 / node.speed;
    int count = 0;
    double t = 0.0;
    while (true) {
      t = next_crossing_after(node, coordinate, t);
      if (t >= period) break;
      ++count;
      REQUIRE(count <= 3);
    }
    CHECK(count == 2);
  }
}

TEST_CASE("positions remain inside the street for arbitrary times") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const MobileNode node =
        make_node(rng.uniform01(), rng.direction(), rng.uniform(0.001, 2.0));
    const MotionState s = position_at(node, rng.uniform(0.0, 500.0));
    CHECK(s.position >= 0.0);
    CHECK(s.position <= 1.0);
    CHECK((s.direction == 1 || s.direction == -1));
  }
}

TEST_CASE("motion rejects out-of-domain arguments") {
  CHECK_THROWS_AS((void)position_at(make_node(0.5, 1, 0.0), 1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)position_at(make_node(1.5, 1, 0.1), 1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)position_at(make_node(0.5, 2, 0.1), 1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)position_at(make_node(0.5, 1, 0.1), -1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)next_crossing_after(make_node(0.5, 1, 0.1), 0.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)next_crossing_after(make_node(0.5, 1, 0.1), 1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("speed profiles clamp beyond the listed levels and validate shape") {
  const SpeedProfile constant = SpeedProfile::constant(0.01);
  CHECK(constant.speed_for_level(0) == doctest::Approx(0.01));
  CHECK(constant.speed_for_level(7) == doctest::Approx(0.01));

  const SpeedProfile faster_deep =
      SpeedProfile::increasing_with_level({0.005, 0.010, 0.015});
  CHECK(faster_deep.speed_for_level(0) == doctest::Approx(0.005));
  CHECK(faster_deep.speed_for_level(2) == doctest::Approx(0.015));
  CHECK(faster_deep.speed_for_level(9) == doctest::Approx(0.015));
  CHECK(faster_deep.min_speed() == doctest::Approx(0.005));
  CHECK(faster_deep.max_speed() == doctest::Approx(0.015));

  const SpeedProfile slower_deep =
      SpeedProfile::decreasing_with_level({0.015, 0.010, 0.005});
  CHECK(slower_deep.speed_for_level(1) == doctest::Approx(0.010));

  CHECK_THROWS_AS((void)SpeedProfile::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)SpeedProfile::increasing_with_level({}), std::invalid_argument);
  CHECK_THROWS_AS((void)SpeedProfile::increasing_with_level({0.02, 0.01}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)SpeedProfile::decreasing_with_level({0.01, 0.02}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)constant.speed_for_level(-1), std::invalid_argument);
}

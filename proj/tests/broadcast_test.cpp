#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hyperfractal/broadcast.hpp"
#include "hyperfractal/params.hpp"
#include "hyperfractal/rng.hpp"
#include "hyperfractal/sampler.hpp"
#include "test_support.hpp"

using namespace hyperfractal;

namespace {

constexpr double kSpeed40 = 0.011111111111111112;  // 40 km/h on a 1 km unit

MobileNode place(std::int64_t id, Orientation orientation, int level,
                 std::int64_t index, double position, int direction, double speed) {
  MobileNode node;
  node.id = id;
  node.street = Street{orientation, level, index};
  node.position = position;
  node.direction = direction;
  node.speed = speed;
  return node;
}

const Street kMainHorizontal{Orientation::kHorizontal, 0, 0};  // y = 0.5
const Street kMainVertical{Orientation::kVertical, 0, 0};      // x = 0.5

}  // namespace

TEST_CASE("two nodes sharing a street exchange the packet in one hop") {
  const Population population = {
      place(0, Orientation::kHorizontal, 0, 0, 0.3, 1, kSpeed40),
      place(1, Orientation::kHorizontal, 0, 0, 0.7, -1, kSpeed40),
  };
  SimConfig config;  // nearest-neighbour reach spans the whole street
  const SimResult result = run(population, config);
  CHECK_FALSE(result.censored);
  CHECK(full_broadcast_time(result) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(result.infection_time.at(0) == 0.0);
  CHECK(result.infection_time.at(1) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(result.hop_infections == 1);
  CHECK(result.handoff_infections == 0);
}

TEST_CASE("only nodes infected strictly before a cycle transmit during it") {
  // Chain 0.2 -> 0.5 -> 0.8: the middle node is infected at h but must wait
  // for the next cycle before relaying, so the far node turns at 2h.
  const Population population = {
      place(0, Orientation::kHorizontal, 0, 0, 0.2, 1, 1e-9),
      place(1, Orientation::kHorizontal, 0, 0, 0.5, 1, 1e-9),
      place(2, Orientation::kHorizontal, 0, 0, 0.8, 1, 1e-9),
  };
  SimConfig config;
  config.stop.horizon = 10.0;  // override the 1/min-speed safety horizon
  const SimResult result = run(population, config);
  CHECK(result.infection_time.at(1) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(result.infection_time.at(2) == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(full_broadcast_time(result) == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(result.hop_infections == 2);
}

TEST_CASE("finite radio range reaches exactly the in-range nodes per cycle") {
  const Population population = {
      place(0, Orientation::kHorizontal, 0, 0, 0.2, 1, 1e-9),
      place(1, Orientation::kHorizontal, 0, 0, 0.3, 1, 1e-9),
      place(2, Orientation::kHorizontal, 0, 0, 0.45, 1, 1e-9),
      place(3, Orientation::kHorizontal, 0, 0, 0.9, 1, 1e-9),
  };
  SimConfig config;
  config.reach = ReachMode::kRadioRange;
  config.radio_range = 0.12;
  config.stop.horizon = 1.0;
  const SimResult result = run(population, config);
  // 0.3 is 0.1 from the source; 0.45 is 0.15 from either transmitter and the
  // nodes barely move, so the epidemic stalls and the run is censored.
  CHECK(result.infection_time.at(1) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(result.infection_time.at(2) ==
        std::numeric_limits<double>::infinity());
  CHECK(result.infection_time.at(3) ==
        std::numeric_limits<double>::infinity());
  CHECK(result.censored);
  CHECK(result.diagnostic.find("2 of 4 infected") != std::string::npos);
  CHECK_THROWS_AS((void)full_broadcast_time(result), std::runtime_error);
}

TEST_CASE("a node driving into radio range is caught at the next cycle") {
  // The healthy node closes in at 0.1/s; it enters the 0.15 range at t=2.5
  // and the first cycle after that is t=2.52.
  const Population population = {
      place(0, Orientation::kHorizontal, 0, 0, 0.1, 1, 1e-9),
      place(1, Orientation::kHorizontal, 0, 0, 0.5, -1, 0.1),
  };
  SimConfig config;
  config.reach = ReachMode::kRadioRange;
  config.radio_range = 0.15;
  const SimResult result = run(population, config);
  CHECK_FALSE(result.censored);
  CHECK(result.infection_time.at(1) == doctest::Approx(2.52).epsilon(1e-12));
}

TEST_CASE("a carrier reaching an intersection hands the packet over exactly there") {
  // Source rides y=0.5 from x=0.4 at 0.1/s; the only busy perpendicular
  // street is x=0.75, reached at t=3.5.  No hop can help across streets.
  const Population population = {
      place(0, Orientation::kHorizontal, 0, 0, 0.4, 1, 0.1),
      place(1, Orientation::kVertical, 1, 1, 0.3, -1, 0.01),
  };
  SimConfig config;
  const SimResult result = run(population, config);
  CHECK_FALSE(result.censored);
  CHECK(result.infection_time.at(1) == doctest::Approx(3.5).epsilon(1e-9));
  CHECK(result.handoff_infections == 1);
  CHECK(result.hop_infections == 0);
  CHECK(result.crossing_events >= 1);
}

TEST_CASE("street changes respect the radio range when it is finite") {
  // The target idles at 0.62 on the vertical street; the handoff happens at
  // its intersection with y=0.5, which is 0.12 away.
  const Population reachable = {
      place(0, Orientation::kHorizontal, 0, 0, 0.4, 1, 0.1),
      place(1, Orientation::kVertical, 1, 1, 0.62, 1, 1e-9),
  };
  SimConfig config;
  config.reach = ReachMode::kRadioRange;
  config.radio_range = 0.13;
  const SimResult hit = run(reachable, config);
  CHECK_FALSE(hit.censored);
  CHECK(hit.infection_time.at(1) == doctest::Approx(3.5).epsilon(1e-9));

  config.radio_range = 0.05;
  config.stop.horizon = 30.0;
  const SimResult miss = run(reachable, config);
  CHECK(miss.censored);
  CHECK(miss.infection_time.at(1) == std::numeric_limits<double>::infinity());
}

TEST_CASE("the full hand-traced two-outbreak scenario plays out") {
  // One vertical carrier crosses y=0.5 twice (t=1 and t=11) and infects a
  // different nearest node each time; a third street node stays healthy but
  // drifts between the two cases, so the street shows two disjoint infected
  // clusters at the late snapshot.
  const Population population = {
      place(0, Orientation::kVertical, 0, 0, 0.40, 1, 0.1),     // carrier
      place(1, Orientation::kHorizontal, 0, 0, 0.45, 1, 1e-6),  // first case
      place(2, Orientation::kHorizontal, 0, 0, 1.00, -1, 0.045),  // second case
      place(3, Orientation::kHorizontal, 0, 0, 0.66, -1, 0.1),  // separator
  };
  SimConfig config;
  config.hop_time = 500.0;  // keep hop cycles out of the horizon
  config.stop.kind = StopRule::Kind::kHorizon;
  config.stop.horizon = 11.5;
  config.snapshot_times = {5.0, 11.2};
  const SimResult result = run(population, config);

  CHECK_FALSE(result.censored);  // reaching a horizon stop is not censoring
  CHECK(result.infection_time.at(1) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(result.infection_time.at(2) == doctest::Approx(11.0).epsilon(1e-9));
  CHECK(result.infection_time.at(3) == std::numeric_limits<double>::infinity());
  CHECK(result.handoff_infections == 2);
  CHECK(result.hop_infections == 0);

  REQUIRE(result.snapshots.size() == 2);
  REQUIRE(result.street_timelines.count(kMainHorizontal) == 1);
  const auto& timeline = result.street_timelines.at(kMainHorizontal);
  REQUIRE(timeline.size() == 2);
  CHECK(timeline[0].time == doctest::Approx(5.0));
  CHECK(timeline[0].clusters == 1);
  CHECK(timeline[1].time == doctest::Approx(11.2));
  CHECK(timeline[1].clusters == 2);

  const std::vector<TeleportReport> reports = teleport_analysis(result);
  bool found = false;
  for (const TeleportReport& report : reports) {
    if (report.street == kMainHorizontal) {
      found = true;
      CHECK(report.outbreak_count_max == 2);
      REQUIRE(report.first_disjoint_outbreak_time.has_value());
      CHECK(*report.first_disjoint_outbreak_time == doctest::Approx(11.2));
    } else {
      CHECK(report.outbreak_count_max == 1);
    }
  }
  CHECK(found);
}

TEST_CASE("snapshots capture the state immediately before their instant") {
  const Population population = {
      place(0, Orientation::kHorizontal, 0, 0, 0.2, 1, 0.1),
      place(1, Orientation::kHorizontal, 0, 0, 0.8, 1, 0.1),
  };
  SimConfig config;
  config.snapshot_times = {0.06, 0.0601, 50.0};
  const SimResult result = run(population, config);
  // The run stops at t=0.06 when the second node turns, so only the first
  // snapshot (taken before the hop at the same instant) exists.
  REQUIRE(result.snapshots.size() == 1);
  const Snapshot& at_hop = result.snapshots.front();
  CHECK(at_hop.time == doctest::Approx(0.06));
  REQUIRE(at_hop.nodes.size() == 2);
  CHECK(at_hop.nodes[0].id == 0);
  CHECK(at_hop.nodes[0].infected);
  CHECK_FALSE(at_hop.nodes[1].infected);  // infected at, not before, 0.06
  CHECK(at_hop.nodes[0].position == doctest::Approx(0.206).epsilon(1e-12));

  CHECK_THROWS_AS((void)teleport_analysis(SimResult{}), std::invalid_argument);
}

TEST_CASE("a target-node stop rule ends the run at that node's turn") {
  const Population population = {
      place(0, Orientation::kHorizontal, 0, 0, 0.2, 1, 1e-9),
      place(1, Orientation::kHorizontal, 0, 0, 0.5, 1, 1e-9),
      place(2, Orientation::kHorizontal, 0, 0, 0.8, 1, 1e-9),
  };
  SimConfig config;
  config.stop.kind = StopRule::Kind::kTargetNode;
  config.stop.target_node = 1;
  config.stop.horizon = 10.0;
  const SimResult result = run(population, config);
  CHECK_FALSE(result.censored);
  CHECK(result.infection_time.at(1) == doctest::Approx(0.06).epsilon(1e-12));
  // The run stopped at t=h, before the far node could turn.
  CHECK(result.infection_time.at(2) == std::numeric_limits<double>::infinity());

  // An unreachable target (no common street, no crossings within horizon).
  const Population apart = {
      place(0, Orientation::kHorizontal, 2, 0, 0.2, 1, 1e-9),
      place(1, Orientation::kHorizontal, 2, 3, 0.5, 1, 1e-9),
  };
  config.stop.target_node = 1;
  config.stop.horizon = 5.0;
  const SimResult censored = run(apart, config);
  CHECK(censored.censored);
  CHECK(censored.diagnostic.find("target node 1") != std::string::npos);
}

TEST_CASE("pair delays report the first infection inside the window") {
  const Population population = {
      place(0, Orientation::kHorizontal, 0, 0, 0.2, 1, 1e-9),
      place(1, Orientation::kHorizontal, 0, 0, 0.4, 1, 1e-9),
  };
  SimConfig config;
  config.stop.horizon = 10.0;

  InfectionWindow window;
  window.street = kMainHorizontal;
  window.center = 0.5;
  window.half_width = 0.2;  // excludes the source at 0.2, admits 0.4
  const std::optional<double> delay =
      measure_pair_delay(population, config, 0, window);
  REQUIRE(delay.has_value());
  CHECK(*delay == doctest::Approx(0.06).epsilon(1e-12));

  // A window nobody enters before the stop rule fires yields no measurement.
  window.center = 0.9;
  window.half_width = 0.01;
  const std::optional<double> missed =
      measure_pair_delay(population, config, 0, window);
  CHECK_FALSE(missed.has_value());

  // A window on a street without nodes is a caller error.
  window.street = Street{Orientation::kVertical, 2, 1};
  CHECK_THROWS_AS((void)measure_pair_delay(population, config, 0, window),
                  std::invalid_argument);
}

TEST_CASE("two perpendicular streets meet the uniform-limit scale on average") {
  // One node per street on the central cross; the packet turns at the
  // carrier's first arrival at the crossing, 45 s in expectation, within the
  // 1/v + h allowance of 90.06 s.
  std::vector<double> delays;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    Rng rng = Rng::for_replication(2026, seed);
    const Population pair = {
        place(0, Orientation::kHorizontal, 0, 0, rng.uniform01(), rng.direction(),
              kSpeed40),
        place(1, Orientation::kVertical, 0, 0, rng.uniform01(), rng.direction(),
              kSpeed40),
    };
    SimConfig config;
    const SimResult result = run(pair, config);
    REQUIRE_FALSE(result.censored);
    const double t = full_broadcast_time(result);
    CHECK(t <= 1.5 / kSpeed40 + 0.060001);  // worst single-run geometry
    delays.push_back(t);
  }
  const test_support::Summary stats = test_support::summarize(delays);
  CHECK(stats.mean < 90.06);
  CHECK(stats.mean == doctest::Approx(45.0).epsilon(0.12));
}

TEST_CASE("a sampled run is reproducible and conserves its event accounting") {
  const HyperfractalParams params = params_from_df(3.0, 120);
  const Population population =
      sample_population(params, 31337, SpeedProfile::constant(kSpeed40));
  SimConfig config;
  config.snapshot_times = {1.0, 5.0, 20.0};

  const SimResult first = run(population, config);
  const SimResult second = run(population, config);
  CHECK_FALSE(first.censored);
  CHECK(first.broadcast_time == second.broadcast_time);  // bitwise
  CHECK(first.infection_time == second.infection_time);
  CHECK(first.crossing_events == second.crossing_events);
  CHECK(first.snapshots.size() == second.snapshots.size());

  // Every node is reached, exactly once, by exactly one mechanism.
  std::int64_t reached = 0;
  for (const auto& [id, time] : first.infection_time) {
    (void)id;
    if (std::isfinite(time)) ++reached;
    CHECK(time >= 0.0);
    if (std::isfinite(time)) CHECK(time <= first.broadcast_time + 1e-12);
  }
  CHECK(reached == 120);
  CHECK(first.hop_infections + first.handoff_infections + 1 == 120);

  // Infection only accumulates between snapshots.
  std::size_t previous = 0;
  for (const Snapshot& snapshot : first.snapshots) {
    std::size_t infected = 0;
    for (const NodeSnapshot& node : snapshot.nodes) infected += node.infected;
    CHECK(infected >= previous);
    previous = infected;
  }
}

TEST_CASE("broadcast inputs are validated") {
  SimConfig config;
  CHECK_THROWS_AS((void)run(Population{}, config), std::invalid_argument);

  const Population pair = {
      place(0, Orientation::kHorizontal, 0, 0, 0.3, 1, kSpeed40),
      place(0, Orientation::kHorizontal, 0, 0, 0.7, 1, kSpeed40),  // dup id
  };
  CHECK_THROWS_AS((void)run(pair, config), std::invalid_argument);

  const Population single = {
      place(0, Orientation::kHorizontal, 0, 0, 0.3, 1, kSpeed40)};
  config.source = 5;
  CHECK_THROWS_AS((void)run(single, config), std::invalid_argument);
  config.source = 0;
  config.hop_time = 0.0;
  CHECK_THROWS_AS((void)run(single, config), std::invalid_argument);
  config.hop_time = 0.06;
  config.reach = ReachMode::kRadioRange;
  config.radio_range = 0.0;
  CHECK_THROWS_AS((void)run(single, config), std::invalid_argument);
  config.reach = ReachMode::kNearestNeighbor;
  config.stop.kind = StopRule::Kind::kHorizon;
  config.stop.horizon = 0.0;
  CHECK_THROWS_AS((void)run(single, config), std::invalid_argument);
}

TEST_CASE("empirical turn times match the single-node closed form") {
  // One node on the horizontal street, none on the vertical: the turn is the
  // node's first arrival at x=0.5, whose mean is (c^2+(1-c)^2)/v = 45 s.
  const TurnTimeStats single = empirical_turn_time(
      kMainHorizontal, kMainVertical, 1, 0, 1.0 / 90.0, 99, 20000);
  CHECK(single.replications == 20000);
  CHECK(single.mean == doctest::Approx(45.0).epsilon(0.035));
  CHECK(single.stddev > 0.0);

  const TurnTimeStats again = empirical_turn_time(
      kMainHorizontal, kMainVertical, 1, 0, 1.0 / 90.0, 99, 20000);
  CHECK(again.mean == single.mean);  // bitwise reproducible

  // More nodes at the intersection turn the packet faster.
  const TurnTimeStats few = empirical_turn_time(
      kMainHorizontal, kMainVertical, 5, 5, 0.0111, 7, 20000);
  const TurnTimeStats many = empirical_turn_time(
      kMainHorizontal, kMainVertical, 25, 25, 0.0111, 7, 20000);
  CHECK(many.mean < few.mean);

  CHECK_THROWS_AS((void)empirical_turn_time(kMainHorizontal, kMainHorizontal, 5,
                                            5, 0.01, 1, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      (void)empirical_turn_time(kMainHorizontal, kMainVertical, 0, 0, 0.01, 1, 100),
      std::invalid_argument);
  CHECK_THROWS_AS(
      (void)empirical_turn_time(kMainHorizontal, kMainVertical, 5, 5, 0.01, 1, 0),
      std::invalid_argument);
}

TEST_CASE("the relay/teleport inflexion fit recovers exact synthetic sweeps") {
  // T = 2 * n^(1-delta) with delta = 0.5: amplitude 2, crossing
  // hop_time * n at n* = (2/0.06)^2.
  const std::vector<std::pair<double, double>> means = {
      {100.0, 20.0}, {400.0, 40.0}, {900.0, 60.0}};
  const InflexionEstimate estimate = estimate_inflexion(means, 0.5, 0.06);
  CHECK(estimate.amplitude == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(estimate.amplitude_ci_low == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(estimate.amplitude_ci_high == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(estimate.n_star == doctest::Approx(1111.1111111111113).epsilon(1e-9));
  CHECK(estimate.n_star_ci_low <= estimate.n_star);
  CHECK(estimate.n_star_ci_high >= estimate.n_star);

  CHECK_THROWS_AS((void)estimate_inflexion({{100.0, 20.0}}, 0.5, 0.06),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)estimate_inflexion(means, 1.5, 0.06), std::invalid_argument);
  CHECK_THROWS_AS((void)estimate_inflexion(means, 0.5, 0.0), std::invalid_argument);
}

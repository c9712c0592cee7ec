#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyperfractal/mobility.hpp"
#include "hyperfractal/street.hpp"

namespace hyperfractal {

// How far a transmission reaches along a street.  Propagation is confined to
// the transmitter's own street either way (the canyon effect); streets only
// exchange the packet when a carrier physically crosses an intersection.
enum class ReachMode : std::uint8_t {
  kNearestNeighbor,  // reaches the nearest healthy node in each direction
  kRadioRange,       // reaches every node within a fixed running distance
};

struct StopRule {
  enum class Kind : std::uint8_t { kFullContamination, kTargetNode, kHorizon };
  Kind kind = Kind::kFullContamination;
  std::int64_t target_node = -1;  // kTargetNode only
  // kHorizon: mandatory end time.  For the other rules: optional override of
  // the automatic safety horizon 10*(hop_time*n + 1/min_speed).
  double horizon = 0.0;
};

// Early-stop region used for pair-delay measurements: the run ends as soon as
// any node of `street` is infected while located within `half_width` of
// `center`.
struct InfectionWindow {
  Street street;
  double center = 0.5;
  double half_width = 0.0;
};

struct SimConfig {
  double hop_time = 0.06;  // seconds between transmission cycles
  ReachMode reach = ReachMode::kNearestNeighbor;
  double radio_range = 0.0;  // running distance, kRadioRange only
  StopRule stop;
  std::int64_t source = 0;  // node id holding the packet at time 0
  std::vector<double> snapshot_times;
  std::optional<InfectionWindow> stop_window;
};

struct NodeSnapshot {
  std::int64_t id = 0;
  Street street;
  double position = 0.0;
  int direction = 1;
  bool infected = false;
};

struct Snapshot {
  double time = 0.0;
  std::vector<NodeSnapshot> nodes;  // ordered by node id
};

struct ClusterSample {
  double time = 0.0;
  int clusters = 0;  // maximal runs of infected nodes in street order
};

struct SimResult {
  // Seconds from the start, keyed by node id; +infinity when never reached.
  std::map<std::int64_t, double> infection_time;
  // Largest recorded infection time.  Under FullContamination and no
  // censoring this is the broadcast time.
  double broadcast_time = 0.0;
  bool censored = false;     // the stop rule was not satisfied by the horizon
  std::string diagnostic;    // human-readable reason when censored
  double horizon = 0.0;      // the horizon actually used
  std::int64_t hop_infections = 0;      // infections through hop cycles
  std::int64_t handoff_infections = 0;  // infections through street changes
  std::int64_t crossing_events = 0;     // carrier intersection arrivals processed
  std::vector<Snapshot> snapshots;
  // Infected-cluster counts per street, sampled at the snapshot times; a
  // street appears from the first snapshot at which it carries an infected
  // node, so every recorded count is >= 1.
  std::map<Street, std::vector<ClusterSample>> street_timelines;
  std::optional<double> window_hit_time;
};

// Runs the epidemic broadcast.  Infected nodes transmit along their street at
// every cycle t = k*hop_time (only nodes infected strictly before t
// transmit); a carrier arriving at an intersection instantaneously hands the
// packet to the nearest node (or to every node in radio range) on the
// perpendicular street.  Healthy nodes crossing intersections are null
// events.  Simultaneous events process crossings before hop cycles and break
// remaining ties by node id, which makes runs bit-reproducible.
SimResult run(const Population& population, const SimConfig& config);

// Broadcast time from a run that stopped by FullContamination; throws if the
// run was censored.
double full_broadcast_time(const SimResult& result);

// Delay from `source` until the packet first reaches the window.  Runs the
// broadcast with the window as an additional stop condition; empty optional
// when the horizon censors the run first.
std::optional<double> measure_pair_delay(const Population& population,
                                         const SimConfig& config,
                                         std::int64_t source,
                                         const InfectionWindow& window);

struct TurnTimeStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::int64_t replications = 0;
};

// Monte-Carlo mean of the street-change time at the intersection of two
// perpendicular streets holding n_i and n_j nodes, all of street i infected.
// The turn completes at the first arrival of any of the n_i + n_j nodes at
// the intersection: a carrier arriving hands the packet over; a healthy
// node arriving picks it up from the saturated street while momentarily on
// both streets.  Positions and directions are redrawn each replication.
TurnTimeStats empirical_turn_time(const Street& street_i, const Street& street_j,
                                  std::int64_t n_i, std::int64_t n_j, double speed,
                                  std::uint64_t master_seed,
                                  std::int64_t replications);

struct TeleportReport {
  Street street;
  int outbreak_count_max = 0;
  // First instant at which the street carried two or more disjoint infected
  // clusters (so at least one cluster without the street's earliest case).
  std::optional<double> first_disjoint_outbreak_time;
  // Population scale where relayed delivery and teleportation exchange
  // dominance; filled by estimate_inflexion on sweep data, not per run.
  std::optional<double> inflexion_estimate;
};

// Per-street cluster statistics from a run that recorded snapshots; throws
// std::invalid_argument when the result holds none.  Reports are ordered by
// street.  Two or more clusters mean at least one cluster excludes the
// street's earliest case, i.e. the packet reached the street's interior
// without traversing it: a disjoint outbreak.
std::vector<TeleportReport> teleport_analysis(const SimResult& result);

struct InflexionEstimate {
  double amplitude = 0.0;  // multiplier of n^(1-delta) in the teleport regime
  double amplitude_ci_low = 0.0;
  double amplitude_ci_high = 0.0;
  double n_star = 0.0;  // where amplitude*n^(1-delta) meets hop_time*n
  double n_star_ci_low = 0.0;
  double n_star_ci_high = 0.0;
};

// Fits broadcast_time = amplitude * n^(1-delta) to sweep means (n, time) and
// intersects it with the relay-chain scale hop_time * n.  Requires at least
// two points.
InflexionEstimate estimate_inflexion(const std::vector<std::pair<double, double>>& means,
                                     double delta, double hop_time);

}  // namespace hyperfractal

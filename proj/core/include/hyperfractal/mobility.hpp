#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hyperfractal/street.hpp"

namespace hyperfractal {

// Node speed as a function of street level, in unit-square lengths per
// second.  Constant profiles hold one entry; level-dependent profiles hold
// one entry per level starting at level 0 and clamp to the last entry beyond
// the listed levels.
struct SpeedProfile {
  enum class Kind { kConstant, kIncreasingWithLevel, kDecreasingWithLevel };

  Kind kind = Kind::kConstant;
  std::vector<double> level_speeds = {0.011111111111111112};  // 40 km/h on a 1 km unit

  static SpeedProfile constant(double speed);
  static SpeedProfile increasing_with_level(std::vector<double> speeds);
  static SpeedProfile decreasing_with_level(std::vector<double> speeds);

  double speed_for_level(int level) const;
  double min_speed() const;
  double max_speed() const;

  // Throws std::invalid_argument on empty/non-positive speeds or a profile
  // whose ordering contradicts its kind.
  void validate() const;
};

// One sampled node.  position/direction describe its state at time 0; the
// billiard motion is closed-form, so the state never needs stepping.
struct MobileNode {
  std::int64_t id = 0;
  Street street;
  double position = 0.0;              // running coordinate in [0,1]
  int direction = 1;                  // +1 or -1
  double speed = 0.0;                 // unit lengths per second
  std::optional<double> infected_at;  // filled by the broadcast engine
};

using Population = std::vector<MobileNode>;

struct MotionState {
  double position = 0.0;
  int direction = 1;
};

// Billiard motion on [0,1]: the node moves at constant speed and reverses
// direction at the borders.  Exact for any t >= 0; at the instant of a
// reflection the reported direction is the outgoing one.
MotionState position_at(const MobileNode& node, double t);

// First time strictly after t0 at which the node's running coordinate equals
// `coordinate`.  Requires coordinate in (0,1) and positive speed.  Iterating
// with t0 = previous result enumerates every crossing; a node passes a given
// interior coordinate exactly twice per billiard period 2/speed.
double next_crossing_after(const MobileNode& node, double coordinate, double t0);

// A node arriving at the intersection of its own street with a perpendicular
// one.
struct CrossingEvent {
  std::int64_t node_id = 0;
  Street perpendicular;  // the street being crossed
  double time = 0.0;
};

}  // namespace hyperfractal

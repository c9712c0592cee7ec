#include "hyperfractal/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyperfractal {

SpeedProfile SpeedProfile::constant(double speed) {
  SpeedProfile profile;
  profile.kind = Kind::kConstant;
  profile.level_speeds = {speed};
  profile.validate();
  return profile;
}

SpeedProfile SpeedProfile::increasing_with_level(std::vector<double> speeds) {
  SpeedProfile profile;
  profile.kind = Kind::kIncreasingWithLevel;
  profile.level_speeds = std::move(speeds);
  profile.validate();
  return profile;
}

SpeedProfile SpeedProfile::decreasing_with_level(std::vector<double> speeds) {
  SpeedProfile profile;
  profile.kind = Kind::kDecreasingWithLevel;
  profile.level_speeds = std::move(speeds);
  profile.validate();
  return profile;
}

double SpeedProfile::speed_for_level(int level) const {
  if (level < 0) throw std::invalid_argument("street level must be non-negative");
  const std::size_t i =
      std::min<std::size_t>(static_cast<std::size_t>(level), level_speeds.size() - 1);
  return level_speeds[i];
}

double SpeedProfile::min_speed() const {
  return *std::min_element(level_speeds.begin(), level_speeds.end());
}

double SpeedProfile::max_speed() const {
  return *std::max_element(level_speeds.begin(), level_speeds.end());
}

void SpeedProfile::validate() const {
  if (level_speeds.empty())
    throw std::invalid_argument("speed profile needs at least one speed");
  for (double v : level_speeds)
    if (!(v > 0.0)) throw std::invalid_argument("speeds must be positive");
  if (kind == Kind::kConstant && level_speeds.size() != 1)
    throw std::invalid_argument("constant profile takes exactly one speed");
  if (kind == Kind::kIncreasingWithLevel &&
      !std::is_sorted(level_speeds.begin(), level_speeds.end()))
    throw std::invalid_argument("increasing profile must be sorted ascending");
  if (kind == Kind::kDecreasingWithLevel &&
      !std::is_sorted(level_speeds.rbegin(), level_speeds.rend()))
    throw std::invalid_argument("decreasing profile must be sorted descending");
}

namespace {

void check_motion_inputs(const MobileNode& node) {
  if (!(node.speed > 0.0)) throw std::invalid_argument("node speed must be positive");
  if (!(node.position >= 0.0 && node.position <= 1.0))
    throw std::invalid_argument("node position must lie in [0,1]");
  if (node.direction != 1 && node.direction != -1)
    throw std::invalid_argument("node direction must be +1 or -1");
}

}  // namespace

MotionState position_at(const MobileNode& node, double t) {
  check_motion_inputs(node);
  if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
  // Unfold the billiard onto the line, then fold back into [0,1].  In the
  // unfolded coordinate u in [0,2): u < 1 maps to position u moving with the
  // unfolded flow, u >= 1 maps to position 2-u moving against it.
  const double s = node.position + node.direction * node.speed * t;
  double u = std::fmod(s, 2.0);
  if (u < 0.0) u += 2.0;
  MotionState state;
  if (u <= 1.0) {
    state.position = u;
    state.direction = node.direction;
  } else {
    state.position = 2.0 - u;
    state.direction = -node.direction;
  }
  return state;
}

double next_crossing_after(const MobileNode& node, double coordinate, double t0) {
  check_motion_inputs(node);
  if (!(coordinate > 0.0 && coordinate < 1.0))
    throw std::invalid_argument("crossing coordinate must lie in (0,1)");
  if (!(t0 >= 0.0)) throw std::invalid_argument("time must be non-negative");
  // In unfolded coordinates the node sits at s0 and moves monotonically; the
  // crossing coordinate unfolds to the lattice {coordinate + 2k} U
  // {-coordinate + 2k}.  When t0 is itself a crossing time, recomputing s0
  // from it can land an ulp short of the lattice point and re-select the same
  // crossing; any candidate within ulp-scale slack of t0 is therefore pushed
  // one full period to the next member of its own family.  (Distinct crossing
  // times are separated by at least 2*min(c, 1-c)/speed, many orders above
  // the slack for every street coordinate in use.)
  const double s0 = node.position + node.direction * node.speed * t0;
  const double period = 2.0 / node.speed;
  const double slack = 1e-12 * (1.0 + t0);
  double time_a, time_b;
  if (node.direction > 0) {
    const double a =
        coordinate + 2.0 * (std::floor((s0 - coordinate) / 2.0) + 1.0);
    const double b =
        -coordinate + 2.0 * (std::floor((s0 + coordinate) / 2.0) + 1.0);
    time_a = (a - node.position) / node.speed;
    time_b = (b - node.position) / node.speed;
  } else {
    const double a =
        coordinate + 2.0 * (std::ceil((s0 - coordinate) / 2.0) - 1.0);
    const double b =
        -coordinate + 2.0 * (std::ceil((s0 + coordinate) / 2.0) - 1.0);
    time_a = (node.position - a) / node.speed;
    time_b = (node.position - b) / node.speed;
  }
  if (time_a <= t0 + slack) time_a += period;
  if (time_b <= t0 + slack) time_b += period;
  return std::min(time_a, time_b);
}

}  // namespace hyperfractal

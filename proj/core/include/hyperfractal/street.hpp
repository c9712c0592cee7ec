#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <vector>

#include "hyperfractal/params.hpp"

namespace hyperfractal {

// Horizontal streets run along x at a fixed y; vertical streets run along y
// at a fixed x.
enum class Orientation : std::uint8_t { kHorizontal = 0, kVertical = 1 };

inline char orientation_code(Orientation o) {
  return o == Orientation::kHorizontal ? 'H' : 'V';
}

// One street of the dyadic grid.  A level-l street sits at transverse
// coordinate (2*index+1)/2^(l+1), index in [0, 2^l); it spans [0,1] in its
// running direction.
struct Street {
  Orientation orientation = Orientation::kHorizontal;
  int level = 0;
  std::int64_t index = 0;

  double coordinate() const {
    return static_cast<double>(2 * index + 1) * std::exp2(-(level + 1));
  }

  friend auto operator<=>(const Street&, const Street&) = default;
};

// Number of streets of one level in one orientation: 2^level.
std::int64_t streets_per_orientation(int level);

// Total streets at one level across both orientations: 2^(level+1).
std::int64_t streets_at_level(int level);

// Sum of street lengths over levels 0..h in one orientation; each street has
// unit length, so this is 2^(h+1) - 1.
double cumulated_length_per_orientation(int h);

// Exact distance from a running coordinate in [0,1] to the nearest
// perpendicular street of level exactly `level`.  Always <= 2^-(level+1).
double nearest_perp_street_distance(double position, int level);

// Critical street depth used by the diverted-route bounds: the deepest level
// whose streets still hold order n^epsilon nodes,
//   H(n) = ceil( log(n^e * p/2) / log(2/q) ),
// where e = 1 - epsilon for unbounded reach along a street and e = 1/2 -
// epsilon for finite radio range.  Throws std::domain_error when the argument
// of the log drops below 1 (the level would be negative).
int critical_level(const HyperfractalParams& params, double epsilon, bool radio_range = false);

// The dyadic street grid truncated at params.l_max.
class StreetGrid {
 public:
  explicit StreetGrid(const HyperfractalParams& params);

  const HyperfractalParams& params() const { return params_; }
  int l_max() const { return params_.l_max; }

  // Every street of every level 0..l_max, horizontal first, then vertical,
  // each ordered by (level, index).
  std::vector<Street> enumerate() const;

  // Total number of streets across both orientations: 2*(2^(l_max+1)-1).
  std::int64_t street_count() const;

 private:
  HyperfractalParams params_;
};

struct StreetHash {
  std::size_t operator()(const Street& s) const {
    // Level < 2^6 and index < 2^56 in any realistic configuration.
    std::uint64_t key = (static_cast<std::uint64_t>(s.index) << 7) |
                        (static_cast<std::uint64_t>(s.level) << 1) |
                        static_cast<std::uint64_t>(s.orientation);
    key ^= key >> 33;
    key *= 0xff51afd7ed558ccdULL;
    key ^= key >> 33;
    return static_cast<std::size_t>(key);
  }
};

}  // namespace hyperfractal

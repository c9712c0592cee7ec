#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "hyperfractal/mobility.hpp"
#include "hyperfractal/params.hpp"
#include "hyperfractal/street.hpp"

namespace hyperfractal {

struct LevelOccupancy {
  std::int64_t busy = 0;   // streets holding at least one node
  std::int64_t total = 0;  // streets existing at this level (both orientations)
};

struct BusyStreetStats {
  std::int64_t total_busy = 0;
  std::int64_t busy_north_south = 0;  // vertical streets
  std::int64_t busy_east_west = 0;    // horizontal streets
  std::map<int, LevelOccupancy> per_level;
};

// Draws a population of params.n nodes.
//
// Level law: P(level = l) proportional to p*q^l, truncated at l_max and
// renormalised (uniform over levels when q == 1).  Orientation, street index
// within the level, position along the street and direction are uniform.
// Per node the draw order is fixed: level, orientation, index, position,
// direction — part of the reproducibility contract.
Population sample_population(const HyperfractalParams& params, std::uint64_t seed,
                             const SpeedProfile& speeds);

// Degenerate one-node-per-street construction: n nodes, each alone on its own
// street, half horizontal and half vertical, street coordinates drawn without
// replacement from the dyadic grid at `level`.  Positions and directions are
// uniform.  This realises the uniform limit (every route change costs one
// street-to-street turn, never a relay chain).
Population one_node_per_street_population(std::int64_t n, std::uint64_t seed,
                                          double speed, int level = 12);

BusyStreetStats busy_street_census(const Population& population);

// Expected number of busy streets for the untruncated model:
//   sum_l 2^(l+1) * (1 - (1 - p_l)^n),  p_l = (p/2)(q/2)^l,
// accumulated until the terms drop below 1e-12.
double expected_busy_streets_exact(const HyperfractalParams& params);

// Population files are JSON lines, one node per line, keys:
// id, orientation ("H"/"V"), level, index, position, direction, speed.
void write_population_jsonl(std::ostream& out, const Population& population);
Population read_population_jsonl(std::istream& in);

}  // namespace hyperfractal

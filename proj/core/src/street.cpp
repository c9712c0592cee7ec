#include "hyperfractal/street.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyperfractal {

std::int64_t streets_per_orientation(int level) {
  if (level < 0 || level > 62) throw std::invalid_argument("street level out of range");
  return std::int64_t{1} << level;
}

std::int64_t streets_at_level(int level) {
  return 2 * streets_per_orientation(level);
}

double cumulated_length_per_orientation(int h) {
  if (h < 0 || h > 62) throw std::invalid_argument("street level out of range");
  return static_cast<double>((std::int64_t{1} << (h + 1)) - 1);
}

double nearest_perp_street_distance(double position, int level) {
  if (!(position >= 0.0 && position <= 1.0))
    throw std::invalid_argument("position must lie in [0,1]");
  const std::int64_t count = streets_per_orientation(level);
  // Street coordinates are (2k+1)/2^(level+1); find the candidate k nearest
  // to `position` and check its neighbour.
  const double scaled = position * static_cast<double>(2 * count);  // = position*2^(level+1)
  std::int64_t k = static_cast<std::int64_t>(std::floor((scaled - 1.0) / 2.0));
  double best = 2.0;
  for (std::int64_t cand = k; cand <= k + 1; ++cand) {
    const std::int64_t clamped = std::clamp<std::int64_t>(cand, 0, count - 1);
    const double coord =
        static_cast<double>(2 * clamped + 1) * std::exp2(-(level + 1));
    best = std::min(best, std::abs(position - coord));
  }
  return best;
}

int critical_level(const HyperfractalParams& params, double epsilon, bool radio_range) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must lie in (0,1)");
  if (params.n <= 0) throw std::invalid_argument("population size must be positive");
  if (!(params.p > 0.0)) throw std::domain_error("critical level undefined for p == 0");
  const double exponent = radio_range ? (0.5 - epsilon) : (1.0 - epsilon);
  const double arg = std::pow(static_cast<double>(params.n), exponent) * params.p / 2.0;
  if (arg < 1.0)
    throw std::domain_error("critical level undefined: n^e * p/2 < 1");
  const double ratio = std::log(arg) / std::log(2.0 / params.q);
  // Guard against a ratio that lands a hair above an integer through rounding.
  return static_cast<int>(std::ceil(ratio - 1e-9));
}

StreetGrid::StreetGrid(const HyperfractalParams& params) : params_(params) {
  if (params_.l_max < 0 || params_.l_max > 30)
    throw std::invalid_argument("street grid level bound out of range");
}

std::vector<Street> StreetGrid::enumerate() const {
  std::vector<Street> out;
  out.reserve(static_cast<std::size_t>(street_count()));
  for (Orientation o : {Orientation::kHorizontal, Orientation::kVertical}) {
    for (int l = 0; l <= params_.l_max; ++l) {
      const std::int64_t count = streets_per_orientation(l);
      for (std::int64_t k = 0; k < count; ++k) out.push_back(Street{o, l, k});
    }
  }
  return out;
}

std::int64_t StreetGrid::street_count() const {
  return 2 * ((std::int64_t{1} << (params_.l_max + 1)) - 1);
}

}  // namespace hyperfractal

#include "hyperfractal/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "hyperfractal/format.hpp"
#include "hyperfractal/rng.hpp"

namespace hyperfractal {

namespace {

// Cumulative distribution of the truncated level law P(l) ~ p*q^l, l <=
// l_max.  q == 1 degenerates to the uniform law over 0..l_max.
std::vector<double> level_cdf(const HyperfractalParams& params) {
  std::vector<double> cdf(static_cast<std::size_t>(params.l_max) + 1);
  double total = 0.0;
  for (int l = 0; l <= params.l_max; ++l) {
    const double weight =
        params.q == 1.0 ? 1.0 : params.p * std::pow(params.q, static_cast<double>(l));
    total += weight;
    cdf[static_cast<std::size_t>(l)] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("level law has zero mass");
  for (double& c : cdf) c /= total;
  cdf.back() = 1.0;
  return cdf;
}

int draw_level(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform01();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(it - cdf.begin());
}

}  // namespace

Population sample_population(const HyperfractalParams& params, std::uint64_t seed,
                             const SpeedProfile& speeds) {
  params.validate();
  speeds.validate();
  Rng rng(seed);
  const std::vector<double> cdf = level_cdf(params);
  Population population;
  population.reserve(static_cast<std::size_t>(params.n));
  for (std::int64_t id = 0; id < params.n; ++id) {
    MobileNode node;
    node.id = id;
    node.street.level = draw_level(cdf, rng);
    node.street.orientation =
        (rng.next_u64() >> 63) ? Orientation::kVertical : Orientation::kHorizontal;
    node.street.index = rng.uniform_int(streets_per_orientation(node.street.level));
    node.position = rng.uniform01();
    node.direction = rng.direction();
    node.speed = speeds.speed_for_level(node.street.level);
    population.push_back(node);
  }
  return population;
}

Population one_node_per_street_population(std::int64_t n, std::uint64_t seed,
                                          double speed, int level) {
  if (n <= 0) throw std::invalid_argument("population size must be positive");
  if (!(speed > 0.0)) throw std::invalid_argument("speed must be positive");
  const std::int64_t slots = streets_per_orientation(level);
  if (n > 2 * slots)
    throw std::invalid_argument("not enough distinct streets at this level");
  Rng rng(seed);
  Population population;
  population.reserve(static_cast<std::size_t>(n));
  std::set<std::int64_t> used_horizontal, used_vertical;
  for (std::int64_t id = 0; id < n; ++id) {
    MobileNode node;
    node.id = id;
    node.street.level = level;
    node.street.orientation =
        (id % 2 == 0) ? Orientation::kHorizontal : Orientation::kVertical;
    auto& used = (node.street.orientation == Orientation::kHorizontal)
                     ? used_horizontal
                     : used_vertical;
    std::int64_t index;
    do {
      index = rng.uniform_int(slots);
    } while (!used.insert(index).second);
    node.street.index = index;
    node.position = rng.uniform01();
    node.direction = rng.direction();
    node.speed = speed;
    population.push_back(node);
  }
  return population;
}

BusyStreetStats busy_street_census(const Population& population) {
  BusyStreetStats stats;
  std::unordered_map<Street, std::int64_t, StreetHash> counts;
  int deepest = -1;
  for (const MobileNode& node : population) {
    ++counts[node.street];
    deepest = std::max(deepest, node.street.level);
  }
  for (int l = 0; l <= deepest; ++l)
    stats.per_level[l].total = streets_at_level(l);
  for (const auto& [street, count] : counts) {
    (void)count;
    ++stats.total_busy;
    if (street.orientation == Orientation::kVertical)
      ++stats.busy_north_south;
    else
      ++stats.busy_east_west;
    ++stats.per_level[street.level].busy;
  }
  return stats;
}

double expected_busy_streets_exact(const HyperfractalParams& params) {
  params.validate();
  if (params.n == 0 || params.p == 0.0) return 0.0;
  double sum = 0.0;
  for (int l = 0; l < 4096; ++l) {
    const double p_l = street_probability_at_level(params, l);
    if (!(p_l > 0.0)) break;
    // 1 - (1-p_l)^n, computed stably for tiny p_l.
    const double busy_probability =
        -std::expm1(static_cast<double>(params.n) * std::log1p(-p_l));
    const double term = std::ldexp(busy_probability, l + 1);  // * 2^(l+1)
    sum += term;
    if (term < 1e-12) break;
  }
  return sum;
}

void write_population_jsonl(std::ostream& out, const Population& population) {
  for (const MobileNode& node : population) {
    out << "{\"id\":" << node.id << ",\"orientation\":\""
        << orientation_code(node.street.orientation)
        << "\",\"level\":" << node.street.level
        << ",\"index\":" << node.street.index
        << ",\"position\":" << format_double(node.position)
        << ",\"direction\":" << node.direction
        << ",\"speed\":" << format_double(node.speed) << "}\n";
  }
}

namespace {

// Minimal parser for the flat JSONL node records written above.  Accepts the
// keys in any order; rejects anything malformed with a line number.
MobileNode parse_node_line(const std::string& line, std::size_t line_no) {
  MobileNode node;
  bool saw_id = false, saw_orientation = false, saw_level = false,
       saw_index = false, saw_position = false, saw_direction = false,
       saw_speed = false;
  std::size_t i = 0;
  auto fail = [line_no](const std::string& message) -> void {
    throw std::runtime_error("population line " + std::to_string(line_no) + ": " +
                             message);
  };
  auto skip_ws = [&] {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  };
  skip_ws();
  if (i >= line.size() || line[i] != '{') fail("expected '{'");
  ++i;
  while (true) {
    skip_ws();
    if (i < line.size() && line[i] == '}') break;
    if (i >= line.size() || line[i] != '"') fail("expected key");
    const std::size_t key_end = line.find('"', i + 1);
    if (key_end == std::string::npos) fail("unterminated key");
    const std::string key = line.substr(i + 1, key_end - i - 1);
    i = key_end + 1;
    skip_ws();
    if (i >= line.size() || line[i] != ':') fail("expected ':'");
    ++i;
    skip_ws();
    if (key == "orientation") {
      if (i + 2 >= line.size() || line[i] != '"') fail("expected orientation string");
      const char code = line[i + 1];
      if (line[i + 2] != '"' || (code != 'H' && code != 'V'))
        fail("orientation must be \"H\" or \"V\"");
      node.street.orientation =
          code == 'H' ? Orientation::kHorizontal : Orientation::kVertical;
      i += 3;
      saw_orientation = true;
    } else {
      std::size_t end = i;
      while (end < line.size() && line[end] != ',' && line[end] != '}') ++end;
      const std::string token = line.substr(i, end - i);
      std::size_t parsed = 0;
      double value = 0.0;
      try {
        value = std::stod(token, &parsed);
      } catch (const std::exception&) {
        fail("bad number for key '" + key + "'");
      }
      while (parsed < token.size() &&
             (token[parsed] == ' ' || token[parsed] == '\t'))
        ++parsed;
      if (parsed != token.size()) fail("bad number for key '" + key + "'");
      i = end;
      if (key == "id") {
        node.id = static_cast<std::int64_t>(value);
        saw_id = true;
      } else if (key == "level") {
        node.street.level = static_cast<int>(value);
        saw_level = true;
      } else if (key == "index") {
        node.street.index = static_cast<std::int64_t>(value);
        saw_index = true;
      } else if (key == "position") {
        node.position = value;
        saw_position = true;
      } else if (key == "direction") {
        node.direction = static_cast<int>(value);
        saw_direction = true;
      } else if (key == "speed") {
        node.speed = value;
        saw_speed = true;
      } else {
        fail("unknown key '" + key + "'");
      }
    }
    skip_ws();
    if (i < line.size() && line[i] == ',') {
      ++i;
      continue;
    }
    if (i < line.size() && line[i] == '}') break;
    fail("expected ',' or '}'");
  }
  if (!(saw_id && saw_orientation && saw_level && saw_index && saw_position &&
        saw_direction && saw_speed))
    fail("missing required key");
  if (node.street.level < 0 || node.street.level > 62) fail("level out of range");
  if (node.street.index < 0 ||
      node.street.index >= streets_per_orientation(node.street.level))
    fail("street index out of range");
  if (!(node.position >= 0.0 && node.position <= 1.0)) fail("position out of range");
  if (node.direction != 1 && node.direction != -1) fail("direction must be +1/-1");
  if (!(node.speed > 0.0)) fail("speed must be positive");
  return node;
}

}  // namespace

Population read_population_jsonl(std::istream& in) {
  Population population;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    population.push_back(parse_node_line(line, line_no));
  }
  return population;
}

}  // namespace hyperfractal

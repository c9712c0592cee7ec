#include "hyperfractal/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "hyperfractal/rng.hpp"
#include "hyperfractal/street.hpp"

namespace hyperfractal::fitting {
namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

void validate_segment(const SegmentRecord& segment) {
  if (segment.segment_id.empty()) {
    throw std::invalid_argument("segment without an id");
  }
  if (!(segment.length_km > 0.0) || !std::isfinite(segment.length_km)) {
    throw std::invalid_argument("segment " + segment.segment_id +
                                ": length must be positive");
  }
  if (!(segment.density >= 0.0) || !std::isfinite(segment.density)) {
    throw std::invalid_argument("segment " + segment.segment_id +
                                ": density must be nonnegative");
  }
}

QuantizedStreet make_street(std::string id, const std::vector<SegmentRecord>& segments,
                            const std::vector<std::size_t>& members) {
  QuantizedStreet street;
  street.street_id = std::move(id);
  double mass = 0.0;
  for (std::size_t index : members) {
    street.member_segments.push_back(segments[index].segment_id);
    street.total_length_km += segments[index].length_km;
    mass += segments[index].length_km * segments[index].density;
  }
  street.density = mass / street.total_length_km;
  return street;
}

// Splits a hinted group at its largest density gap until every part satisfies
// the factor-A constraint; `members` arrives sorted by density, descending.
void split_group(const std::vector<SegmentRecord>& segments,
                 std::vector<std::size_t> members, double factor,
                 std::vector<std::vector<std::size_t>>& parts) {
  const double top = segments[members.front()].density;
  const double bottom = segments[members.back()].density;
  const bool within_factor =
      bottom > 0.0 ? top <= factor * bottom * (1.0 + 1e-12) : top == 0.0;
  if (within_factor || members.size() == 1) {
    parts.push_back(std::move(members));
    return;
  }
  std::size_t cut = 0;
  double best_gap = -1.0;
  for (std::size_t i = 0; i + 1 < members.size(); ++i) {
    const double upper = segments[members[i]].density;
    const double lower = segments[members[i + 1]].density;
    const double gap = lower > 0.0 ? upper / lower : kInfinity;
    if (gap > best_gap) {
      best_gap = gap;
      cut = i;
    }
  }
  std::vector<std::size_t> head(members.begin(), members.begin() + cut + 1);
  std::vector<std::size_t> tail(members.begin() + cut + 1, members.end());
  split_group(segments, std::move(head), factor, parts);
  split_group(segments, std::move(tail), factor, parts);
}

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool degenerate = false;  // zero variance in y
};

OlsFit ordinary_least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mean_x) * (x[i] - mean_x);
    sxy += (x[i] - mean_x) * (y[i] - mean_y);
    syy += (y[i] - mean_y) * (y[i] - mean_y);
  }
  if (!(sxx > 0.0)) {
    throw std::invalid_argument("regression abscissae are all equal");
  }
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  if (syy > 0.0) {
    const double residual = syy - fit.slope * sxy;
    fit.r_squared = std::clamp(1.0 - residual / syy, 0.0, 1.0);
  } else {
    fit.degenerate = true;
  }
  return fit;
}

}  // namespace

std::vector<QuantizedStreet> quantize_streets(const std::vector<SegmentRecord>& segments,
                                              double quantization_factor) {
  if (segments.empty()) {
    throw std::invalid_argument("quantize_streets: no segments");
  }
  if (!(quantization_factor >= 1.0) || !std::isfinite(quantization_factor)) {
    throw std::invalid_argument("quantize_streets: quantization factor must be >= 1");
  }
  for (const SegmentRecord& segment : segments) validate_segment(segment);

  // Hinted groups in first-appearance order, then the hint-less pool.
  std::vector<std::string> hint_order;
  std::map<std::string, std::vector<std::size_t>> hinted;
  std::vector<std::size_t> hintless;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].street_hint.empty()) {
      hintless.push_back(i);
    } else {
      auto [it, inserted] = hinted.try_emplace(segments[i].street_hint);
      if (inserted) hint_order.push_back(segments[i].street_hint);
      it->second.push_back(i);
    }
  }

  std::vector<QuantizedStreet> streets;
  for (const std::string& hint : hint_order) {
    std::vector<std::size_t> members = hinted[hint];
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return segments[a].density > segments[b].density;
    });
    std::vector<std::vector<std::size_t>> parts;
    split_group(segments, std::move(members), quantization_factor, parts);
    for (std::size_t part = 0; part < parts.size(); ++part) {
      std::string id = hint;
      if (parts.size() > 1) id += "#" + std::to_string(part + 1);
      streets.push_back(make_street(std::move(id), segments, parts[part]));
    }
  }

  if (!hintless.empty()) {
    double max_density = 0.0;
    for (std::size_t index : hintless) {
      max_density = std::max(max_density, segments[index].density);
    }
    // Band index per segment; zero densities collect into one trailing band.
    std::map<long, std::vector<std::size_t>> bands;
    std::vector<std::size_t> zero_band;
    for (std::size_t index : hintless) {
      const double density = segments[index].density;
      if (density <= 0.0) {
        zero_band.push_back(index);
      } else if (quantization_factor == 1.0) {
        // Degenerate quantization: group exactly equal densities.  Map the
        // density ordering to integers by rank below.
        bands[0].push_back(index);
      } else {
        const long k = static_cast<long>(std::floor(
            std::log(max_density / density) / std::log(quantization_factor) + 1e-12));
        bands[k].push_back(index);
      }
    }
    if (quantization_factor == 1.0 && !bands.empty()) {
      std::map<double, std::vector<std::size_t>, std::greater<double>> exact;
      for (std::size_t index : bands[0]) {
        exact[segments[index].density].push_back(index);
      }
      bands.clear();
      long rank = 0;
      for (auto& [density, members] : exact) bands[rank++] = std::move(members);
    }
    for (auto& [k, members] : bands) {
      streets.push_back(
          make_street("band-" + std::to_string(k), segments, members));
    }
    if (!zero_band.empty()) {
      streets.push_back(make_street("band-zero", segments, zero_band));
    }
  }

  std::stable_sort(streets.begin(), streets.end(),
                   [](const QuantizedStreet& a, const QuantizedStreet& b) {
                     if (a.density != b.density) return a.density > b.density;
                     return a.street_id < b.street_id;
                   });
  return streets;
}

FitReport fit_fractal_dimension(const std::vector<QuantizedStreet>& streets,
                                double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw std::invalid_argument("fit_fractal_dimension: tail fraction must lie in (0,1]");
  }
  if (streets.size() < 3) {
    throw std::invalid_argument("fit_fractal_dimension: need at least 3 streets");
  }
  std::vector<const QuantizedStreet*> order;
  order.reserve(streets.size());
  for (const QuantizedStreet& street : streets) {
    if (!(street.total_length_km > 0.0) || !(street.density >= 0.0)) {
      throw std::invalid_argument("fit_fractal_dimension: malformed street " +
                                  street.street_id);
    }
    order.push_back(&street);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const QuantizedStreet* a, const QuantizedStreet* b) {
                     if (a->density != b->density) return a->density > b->density;
                     return a->street_id < b->street_id;
                   });

  FitReport report;
  report.tail_fraction = tail_fraction;
  double cumulated = 0.0;
  for (const QuantizedStreet* street : order) {
    cumulated += street->total_length_km;
    report.cumulated_curve.emplace_back(cumulated, street->density);
  }

  double distinct = 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->density != order[i - 1]->density) ++distinct;
  }
  if (distinct < 3) {
    throw std::invalid_argument(
        "fit_fractal_dimension: need at least 3 distinct densities");
  }

  const std::size_t points = report.cumulated_curve.size();
  const std::size_t tail = std::min(
      points,
      std::max<std::size_t>(
          3, static_cast<std::size_t>(
                 std::ceil(tail_fraction * static_cast<double>(points)))));
  std::vector<double> x;
  std::vector<double> y;
  std::size_t dropped_zero = 0;
  for (std::size_t i = points - tail; i < points; ++i) {
    const auto& [xi, lambda] = report.cumulated_curve[i];
    if (lambda > 0.0) {
      x.push_back(std::log(xi));
      y.push_back(std::log(lambda));
    } else {
      ++dropped_zero;
    }
  }
  if (dropped_zero > 0) {
    report.warnings.push_back(std::to_string(dropped_zero) +
                              " zero-density street(s) dropped from the fit tail"
                              " (length kept in the cumulation)");
  }
  if (x.size() < 3) {
    throw std::invalid_argument(
        "fit_fractal_dimension: fewer than 3 usable points in the fit tail");
  }
  const OlsFit fit = ordinary_least_squares(x, y);
  if (fit.degenerate) {
    report.warnings.push_back("fit tail has constant density; r_squared not meaningful");
  }
  report.slope = fit.slope;
  report.intercept = fit.intercept;
  report.r_squared = fit.r_squared;
  report.d_f_hat = 1.0 - fit.slope;
  return report;
}

std::vector<SegmentRecord> synthetic_street_table(const HyperfractalParams& params,
                                                  const TableOptions& options) {
  params.validate();
  if (options.levels < 0 || options.levels > 40) {
    throw std::invalid_argument("synthetic_street_table: levels must lie in [0,40]");
  }
  if (options.segments_per_street < 1) {
    throw std::invalid_argument("synthetic_street_table: need >= 1 segment per street");
  }
  if (!(options.noise >= 0.0 && options.noise < 1.0)) {
    throw std::invalid_argument("synthetic_street_table: noise must lie in [0,1)");
  }
  Rng rng(options.seed);
  const auto noisy = [&](double value) {
    if (options.noise == 0.0) return value;
    return value * (1.0 + options.noise * (2.0 * rng.uniform01() - 1.0));
  };

  std::vector<SegmentRecord> table;
  const int orientations = options.both_orientations ? 2 : 1;
  for (int level = 0; level <= options.levels; ++level) {
    const double intensity = intensity_at_level(params, level);
    const double streets_per_side = std::ldexp(1.0, level);
    if (!options.per_street) {
      SegmentRecord row;
      row.segment_id = "level-" + std::to_string(level);
      if (options.with_hints) row.street_hint = row.segment_id;
      row.length_km = streets_per_side * orientations;
      row.density = noisy(intensity);
      table.push_back(std::move(row));
      continue;
    }
    for (int side = 0; side < orientations; ++side) {
      const char code = side == 0 ? 'H' : 'V';
      for (std::int64_t index = 0; index < static_cast<std::int64_t>(streets_per_side);
           ++index) {
        const std::string street_name =
            std::string(1, code) + std::to_string(level) + "-" + std::to_string(index);
        for (int segment = 0; segment < options.segments_per_street; ++segment) {
          SegmentRecord row;
          row.segment_id = street_name + "-s" + std::to_string(segment);
          if (options.with_hints) row.street_hint = street_name;
          row.length_km = 1.0 / options.segments_per_street;
          row.density = noisy(intensity);
          table.push_back(std::move(row));
        }
      }
    }
  }
  return table;
}

std::vector<SegmentRecord> read_segments_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  const std::string expected_header =
      "segment_id,street_hint,length_km,density_veh_per_km";
  std::string line;
  std::size_t line_number = 0;
  std::vector<SegmentRecord> segments;
  const auto fail = [&](const std::string& message) {
    throw std::runtime_error(path + ":" + std::to_string(line_number) + ": " + message);
  };
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_number == 1) {
      if (line != expected_header) fail("expected header '" + expected_header + "'");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 4) {
      fail("expected 4 comma-separated fields, found " + std::to_string(fields.size()));
    }
    SegmentRecord record;
    record.segment_id = fields[0];
    record.street_hint = fields[1];
    if (record.segment_id.empty()) fail("segment_id must not be empty");
    const auto parse = [&](const std::string& text, const char* what) {
      if (text.empty()) fail(std::string(what) + " must not be empty");
      char* end = nullptr;
      const double value = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size() || !std::isfinite(value)) {
        fail(std::string("malformed ") + what + " '" + text + "'");
      }
      return value;
    };
    record.length_km = parse(fields[2], "length_km");
    record.density = parse(fields[3], "density_veh_per_km");
    if (!(record.length_km > 0.0)) fail("length_km must be positive");
    if (!(record.density >= 0.0)) fail("density_veh_per_km must be nonnegative");
    segments.push_back(std::move(record));
  }
  if (line_number == 0) {
    throw std::runtime_error(path + ":1: empty file, expected header");
  }
  return segments;
}

SpatialCriterionReport spatial_intersection_criterion(const HyperfractalParams& params,
                                                      double class_factor,
                                                      int sample_points) {
  params.validate();
  if (!(class_factor > 1.0) || !std::isfinite(class_factor)) {
    throw std::invalid_argument("spatial criterion: class factor must exceed 1");
  }
  if (sample_points < 16) {
    throw std::invalid_argument("spatial criterion: need at least 16 sample points");
  }
  SpatialCriterionReport report;
  report.expected_slope = params.delta;

  // Group consecutive levels into classes of density ratio < class_factor.
  std::vector<std::pair<int, int>> class_ranges;
  int class_start = 0;
  double class_top = intensity_at_level(params, 0);
  for (int level = 1; level <= params.l_max; ++level) {
    const double intensity = intensity_at_level(params, level);
    if (!(intensity * class_factor > class_top)) {
      class_ranges.emplace_back(class_start, level - 1);
      class_start = level;
      class_top = intensity;
    }
  }
  class_ranges.emplace_back(class_start, params.l_max);

  std::vector<double> log_density;
  std::vector<double> log_distance;
  for (const auto& [first, last] : class_ranges) {
    DensityClassDistance entry;
    entry.first_level = first;
    entry.last_level = last;
    double mass = 0.0;
    double length = 0.0;
    for (int level = first; level <= last; ++level) {
      const double streets = std::ldexp(1.0, level);
      mass += streets * intensity_at_level(params, level);
      length += streets;
    }
    entry.density = mass / length;
    double worst = 0.0;
    for (int j = 0; j < sample_points; ++j) {
      const double x = (j + 0.5) / sample_points;
      double nearest = kInfinity;
      for (int level = first; level <= last; ++level) {
        nearest = std::min(nearest, nearest_perp_street_distance(x, level));
      }
      worst = std::max(worst, nearest);
    }
    entry.max_distance = worst;
    report.classes.push_back(entry);
    log_density.push_back(std::log(entry.density));
    log_distance.push_back(std::log(entry.max_distance));
  }
  if (report.classes.size() < 2) {
    report.status = "skipped: fewer than two density classes";
    return report;
  }
  const OlsFit fit = ordinary_least_squares(log_density, log_distance);
  report.slope = fit.slope;
  report.evaluated = true;
  report.status = "evaluated";
  return report;
}

SpatialCriterionReport spatial_intersection_criterion(
    const std::vector<SegmentRecord>& segments, double class_factor) {
  if (!(class_factor > 1.0) || !std::isfinite(class_factor)) {
    throw std::invalid_argument("spatial criterion: class factor must exceed 1");
  }
  for (const SegmentRecord& segment : segments) validate_segment(segment);
  SpatialCriterionReport report;
  report.status = "skipped: table carries no street geometry";
  return report;
}

TimeCriterionReport time_interval_criterion(const std::vector<TurnSample>& samples,
                                            double slowness) {
  if (!(slowness > 0.0) || !std::isfinite(slowness)) {
    throw std::invalid_argument("time criterion: slowness must be positive");
  }
  TimeCriterionReport report;
  report.slowness = slowness;
  if (samples.empty()) {
    report.status = "skipped: no crossing logs";
    return report;
  }
  for (const TurnSample& sample : samples) {
    if (sample.nodes_on_i < 0 || sample.nodes_on_j < 0 ||
        sample.nodes_on_i + sample.nodes_on_j < 1 ||
        !(sample.mean_interval >= 0.0) || !std::isfinite(sample.mean_interval)) {
      throw std::invalid_argument("time criterion: malformed turn sample");
    }
    ++report.intersections;
    const double bound =
        slowness / static_cast<double>(sample.nodes_on_i + sample.nodes_on_j);
    if (sample.mean_interval > bound) ++report.violations;
  }
  report.violation_fraction =
      static_cast<double>(report.violations) / static_cast<double>(report.intersections);
  report.evaluated = true;
  report.status = "evaluated";
  return report;
}

}  // namespace hyperfractal::fitting

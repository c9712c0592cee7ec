#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hyperfractal/params.hpp"

namespace hyperfractal::fitting {

// One row of a street-traffic table: a piece of road with a measured average
// vehicle density.  street_hint ties segments of the same physical street
// together when the data source knows it; empty means unknown.
struct SegmentRecord {
  std::string segment_id;
  std::string street_hint;
  double length_km = 0.0;  // > 0
  double density = 0.0;    // vehicles per km, >= 0
};

struct QuantizedStreet {
  std::string street_id;
  std::vector<std::string> member_segments;
  double total_length_km = 0.0;
  double density = 0.0;  // length-weighted mean of the members
};

// Groups segments into streets whose member densities vary by at most a
// factor of quantization_factor (A >= 1; A = 1 admits only exactly equal
// densities).  Segments sharing a hint merge as one street and split at the
// largest density gap when the factor constraint fails; hint-less segments
// fall into geometric density bands [max/A^(k+1), max/A^k) anchored at the
// largest hint-less density, with zero-density segments collected into one
// zero band.  Output is ordered by density, largest first.
std::vector<QuantizedStreet> quantize_streets(const std::vector<SegmentRecord>& segments,
                                              double quantization_factor);

struct FitReport {
  double d_f_hat = 0.0;
  double slope = 0.0;      // d_f_hat = 1 - slope
  double intercept = 0.0;  // of log density on log cumulated length
  double r_squared = 0.0;
  double tail_fraction = 0.5;
  std::vector<std::pair<double, double>> cumulated_curve;  // (xi, lambda)
  std::vector<std::string> warnings;
};

// Ranks streets by density (largest first), cumulates lengths into xi, and
// fits log density on log xi by ordinary least squares over the last
// ceil(tail_fraction * points) curve points, never fewer than 3 (the law is
// asymptotic, so only the large-xi region carries the dimension).
// Zero-density streets keep their length in xi but are dropped from the
// regression with a warning.
FitReport fit_fractal_dimension(const std::vector<QuantizedStreet>& streets,
                                double tail_fraction = 0.5);

struct TableOptions {
  int levels = 8;               // deepest street level materialized
  bool per_street = false;      // false: one aggregate row per level
  int segments_per_street = 1;  // per-street rows only
  double noise = 0.0;           // multiplicative, uniform on [1-noise, 1+noise]
  std::uint64_t seed = 0;
  bool with_hints = true;
  bool both_orientations = false;  // default: one orientation (model convention)
};

// Model street-traffic table on a 1 km unit edge: level l carries 2^l streets
// per orientation at intensity n*(p/2)*(q/2)^l vehicles per street.
std::vector<SegmentRecord> synthetic_street_table(const HyperfractalParams& params,
                                                  const TableOptions& options);

// Strict reader for the CSV schema
// `segment_id,street_hint,length_km,density_veh_per_km` (UTF-8, comma
// separated, '.' decimal, no quoting).  Throws std::runtime_error naming the
// 1-based line of the first malformed record.
std::vector<SegmentRecord> read_segments_csv(const std::string& path);

struct DensityClassDistance {
  double density = 0.0;       // length-weighted intensity of the class
  double max_distance = 0.0;  // worst distance to the nearest class street
  int first_level = 0;
  int last_level = 0;
};

struct SpatialCriterionReport {
  bool evaluated = false;
  std::string status;
  double slope = 0.0;           // of log max-distance on log class density
  double expected_slope = 0.0;  // delta = 1/(d_F - 1)
  std::vector<DensityClassDistance> classes;
};

// Spacing criterion on the synthetic grid: levels are grouped into density
// classes of ratio < class_factor; for each class the worst distance from a
// deterministic sample grid to the nearest perpendicular street of the class
// is measured, and log distance regresses on log density.  The law
// L([lambda, C*lambda)) = O(lambda^delta) predicts slope ~ delta.
SpatialCriterionReport spatial_intersection_criterion(const HyperfractalParams& params,
                                                      double class_factor,
                                                      int sample_points = 4096);

// Measured tables carry no coordinates in this schema, so the spatial
// criterion is not evaluable on them; reported as skipped, never an error.
SpatialCriterionReport spatial_intersection_criterion(
    const std::vector<SegmentRecord>& segments, double class_factor);

// Aggregated first-passage log for one intersection: streets holding
// nodes_on_i and nodes_on_j nodes, and the measured mean time until the
// packet turned.
struct TurnSample {
  std::int64_t nodes_on_i = 0;
  std::int64_t nodes_on_j = 0;
  double mean_interval = 0.0;  // seconds
};

struct TimeCriterionReport {
  bool evaluated = false;
  std::string status;
  double slowness = 0.0;  // S; with constant speed S = 1/v
  std::int64_t intersections = 0;
  std::int64_t violations = 0;
  double violation_fraction = 0.0;
};

// Checks each intersection's mean turn interval against S/(n_i + n_j) and
// reports the violating fraction.  Empty logs are skipped, not an error.
TimeCriterionReport time_interval_criterion(const std::vector<TurnSample>& samples,
                                            double slowness);

}  // namespace hyperfractal::fitting

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperfractal/params.hpp"

namespace hyperfractal::bounds {

// Inputs shared by the closed-form broadcast-time bounds.  Speeds are in unit
// lengths per second, hop_time in seconds.
struct BoundInputs {
  HyperfractalParams params;
  double hop_time = 0.06;
  double speed = 0.011111111111111112;  // 40 km/h on a 1 km unit square
  double epsilon = 0.1;
  bool radio_range = false;  // finite-radius reach instead of whole-street reach
};

// -Gamma(-delta) for delta in (0,1), evaluated as Gamma(1-delta)/delta to
// stay on positive Gamma arguments.  Throws std::domain_error outside (0,1).
double gamma_neg_delta(double delta);

// The value diverges as delta -> 1 (the uniform limit); callers are warned
// within this margin.
bool gamma_near_singular(double delta);

// Expected busy streets, large-n asymptotic: n^delta * (-Gamma(-delta)) /
// log(2/q).
double busy_streets_asymptotic(const HyperfractalParams& params);

// Direct-route upper bound on the mean broadcast time: h*p*n + 1/v.
double upper_bound_direct(const BoundInputs& inputs);

struct DivertedBound {
  double hop_term = 0.0;        // relay chain along the diverted route
  double side_street_term = 0.0;  // hops spent on the auxiliary street
  double turn_term = 0.0;       // street-change waits
  double tail_term = 0.0;       // empty-street failure allowance, n*exp(-(q/2)n^eps)
  double total = 0.0;
  bool tail_dominant = false;   // tail_term exceeds 25% of the total
  bool decaying_hop_term = false;  // hop-term exponent went negative (radio only)
};

// Diverted-route upper bound:
//   2*h*p*n^(1-delta+eps)*(2/p)^delta + (4/q)*h*n^(eps/delta)
//   + turns + n*exp(-(q/2)*n^eps),
// with turns = 3/v, or 2/(v*n) + 1/(v*n^(eps/delta)) when tight_turns is set.
// Radio-range inputs replace the first exponent by 1/2-delta+eps.
DivertedBound upper_bound_diverted(const BoundInputs& inputs, bool tight_turns = false);

// Lower bound on the mean broadcast time:
//   (p^3/2) * h * n^(1-delta) * log(2/q) / (-Gamma(-delta)),
// exponent 1-delta/2 for radio-range reach.  An order-of-magnitude scale: the
// constant is not claimed sharp.
double lower_bound(const BoundInputs& inputs);

// Floor on the mean source-to-destination delay for a perpendicular street
// pair under nearest-neighbor reach: h*p*n*log(2/q)/(-Gamma(-delta)).
double lower_bound_pair(const BoundInputs& inputs);

// Mean street-change (turn) time bound at an intersection whose streets hold
// n_i and n_j nodes: 1/(v*(n_i+n_j)).
double turn_time_bound(std::int64_t n_i, std::int64_t n_j, double speed);

// Broadcast-time scale for the one-node-per-street uniform limit: 1/v + h,
// independent of n.  An order scale, not a sharp constant.
double poisson_uniform_bound(double hop_time, double speed);

// Probability that one street at the critical depth holds no node:
// exp(-(q/2) * n^epsilon).  Multiply by n (see union factor below) for the
// union bound used by the diverted tail term.
double empty_street_probability(const HyperfractalParams& params, double epsilon);
double empty_street_union_bound(const HyperfractalParams& params, double epsilon);

// Everything above evaluated once, with the qualitative flags gathered for
// reporting.
struct BoundSet {
  BoundInputs inputs;
  double upper_direct = 0.0;
  DivertedBound upper_diverted;
  double lower = 0.0;
  double busy_streets = 0.0;
  std::vector<std::string> notes;

  double turn_time(std::int64_t n_i, std::int64_t n_j) const {
    return turn_time_bound(n_i, n_j, inputs.speed);
  }
};

BoundSet evaluate_bounds(const BoundInputs& inputs, bool tight_turns = false);

}  // namespace hyperfractal::bounds

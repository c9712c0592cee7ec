#pragma once

#include <cstdint>

namespace hyperfractal {

// Model parameters for a hyperfractal street layout on the unit square.
//
// A street of depth l (l = 0, 1, ...) runs the full unit interval at a fixed
// transverse coordinate (2k+1)/2^(l+1); there are 2^l such streets per
// orientation per level.  A population of n nodes is distributed over the
// levels with weight p*q^l (q = 1-p), which is equivalent to the fractal
// support with dimension d_f satisfying (1/2)^d_f = q/4.  delta = 1/(d_f-1)
// is the scaling exponent that shows up in the broadcast-time bounds.
struct HyperfractalParams {
  std::int64_t n = 0;      // population size
  double p = 0.5;          // weight of the top-level cross, in [0,1]
  double q = 0.5;          // 1 - p
  double d_f = 3.0;        // fractal dimension, >= 2 (infinite when p == 1)
  double delta = 0.5;      // 1/(d_f - 1), in [0,1]
  int l_max = 5;           // deepest street level materialised by the sampler

  // Throws std::invalid_argument if the fields are inconsistent or out of
  // their documented domains.
  void validate() const;
};

// Builds parameters from the fractal dimension.  Requires d_f >= 2 and n >= 0.
HyperfractalParams params_from_df(double d_f, std::int64_t n, int l_max = 5);

// Builds parameters from the top-level weight p in [0,1].  p == 1 yields the
// degenerate central-cross model (d_f infinite, delta 0); p == 0 yields the
// uniform limit d_f = 2, delta = 1.
HyperfractalParams params_from_p(double p, std::int64_t n, int l_max = 5);

// Forward map: fractal dimension implied by q = 1-p.
double df_from_q(double q);

// Expected node density per unit length on one level-l street:
//   lambda_l = n * (p/2) * (q/2)^l.
// The densities account for every street of every level, so
// sum_l 2^(l+1) * lambda_l = n.
double intensity_at_level(const HyperfractalParams& params, int level);

// Probability that one sampled node lands on one given level-l street:
// lambda_l / n.  Valid for the untruncated level law.
double street_probability_at_level(const HyperfractalParams& params, int level);

}  // namespace hyperfractal

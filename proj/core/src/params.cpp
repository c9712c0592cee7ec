#include "hyperfractal/params.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hyperfractal {

namespace {

constexpr double kLn2 = 0.6931471805599453;

void require(bool cond, const std::string& message) {
  if (!cond) throw std::invalid_argument(message);
}

}  // namespace

void HyperfractalParams::validate() const {
  require(n >= 0, "population size must be non-negative");
  require(l_max >= 0, "l_max must be non-negative");
  require(p >= 0.0 && p <= 1.0, "p must lie in [0,1]");
  require(std::abs((p + q) - 1.0) <= 1e-12, "p + q must equal 1");
  if (p == 1.0) {
    // Degenerate central-cross model.
    require(std::isinf(d_f), "p == 1 implies an infinite fractal dimension");
    require(delta == 0.0, "p == 1 implies delta == 0");
    return;
  }
  require(d_f >= 2.0 - 1e-12, "fractal dimension must be >= 2");
  const double expect_df = df_from_q(q);
  require(std::abs(d_f - expect_df) <= 1e-9 * std::max(1.0, expect_df),
          "d_f inconsistent with q: expected " + std::to_string(expect_df));
  const double expect_delta = kLn2 / std::log(2.0 / q);
  require(std::abs(delta - expect_delta) <= 1e-9,
          "delta inconsistent with q: expected " + std::to_string(expect_delta));
}

double df_from_q(double q) {
  if (q <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(4.0 / q) / kLn2;
}

HyperfractalParams params_from_df(double d_f, std::int64_t n, int l_max) {
  if (!(d_f >= 2.0)) throw std::invalid_argument("fractal dimension must be >= 2");
  if (n < 0) throw std::invalid_argument("population size must be non-negative");
  if (l_max < 0) throw std::invalid_argument("l_max must be non-negative");
  HyperfractalParams params;
  params.n = n;
  params.l_max = l_max;
  params.d_f = d_f;
  params.q = 4.0 * std::exp2(-d_f);
  params.p = 1.0 - params.q;
  params.delta = 1.0 / (d_f - 1.0);
  return params;
}

HyperfractalParams params_from_p(double p, std::int64_t n, int l_max) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  if (n < 0) throw std::invalid_argument("population size must be non-negative");
  if (l_max < 0) throw std::invalid_argument("l_max must be non-negative");
  HyperfractalParams params;
  params.n = n;
  params.l_max = l_max;
  params.p = p;
  params.q = 1.0 - p;
  params.d_f = df_from_q(params.q);
  params.delta = (p == 1.0) ? 0.0 : kLn2 / std::log(2.0 / params.q);
  return params;
}

double intensity_at_level(const HyperfractalParams& params, int level) {
  if (level < 0) throw std::invalid_argument("street level must be non-negative");
  return static_cast<double>(params.n) * street_probability_at_level(params, level);
}

double street_probability_at_level(const HyperfractalParams& params, int level) {
  if (level < 0) throw std::invalid_argument("street level must be non-negative");
  return (params.p / 2.0) * std::pow(params.q / 2.0, static_cast<double>(level));
}

}  // namespace hyperfractal

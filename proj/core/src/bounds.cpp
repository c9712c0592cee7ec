#include "hyperfractal/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace hyperfractal::bounds {

namespace {

void check_common(const BoundInputs& inputs) {
  inputs.params.validate();
  if (!(inputs.hop_time > 0.0)) throw std::invalid_argument("hop time must be positive");
  if (!(inputs.speed > 0.0)) throw std::invalid_argument("speed must be positive");
  if (!(inputs.epsilon > 0.0 && inputs.epsilon < 1.0))
    throw std::invalid_argument("epsilon must lie in (0,1)");
}

double n_real(const BoundInputs& inputs) {
  return static_cast<double>(inputs.params.n);
}

}  // namespace

double gamma_neg_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("gamma_neg_delta requires delta in (0,1)");
  return std::tgamma(1.0 - delta) / delta;
}

bool gamma_near_singular(double delta) { return std::abs(delta - 1.0) < 0.05; }

double busy_streets_asymptotic(const HyperfractalParams& params) {
  params.validate();
  const double delta = params.delta;
  return std::pow(static_cast<double>(params.n), delta) * gamma_neg_delta(delta) /
         std::log(2.0 / params.q);
}

double upper_bound_direct(const BoundInputs& inputs) {
  check_common(inputs);
  return inputs.hop_time * inputs.params.p * n_real(inputs) + 1.0 / inputs.speed;
}

DivertedBound upper_bound_diverted(const BoundInputs& inputs, bool tight_turns) {
  check_common(inputs);
  const double n = n_real(inputs);
  const double p = inputs.params.p;
  const double q = inputs.params.q;
  const double delta = inputs.params.delta;
  const double eps = inputs.epsilon;
  const double h = inputs.hop_time;
  const double v = inputs.speed;

  DivertedBound result;
  const double hop_exponent =
      (inputs.radio_range ? 0.5 : 1.0) - delta + eps;
  result.decaying_hop_term = hop_exponent < 0.0;
  result.hop_term = 2.0 * h * p * std::pow(n, hop_exponent) * std::pow(2.0 / p, delta);
  result.side_street_term = (4.0 / q) * h * std::pow(n, eps / delta);
  result.turn_term = tight_turns
                         ? 2.0 / (v * n) + 1.0 / (v * std::pow(n, eps / delta))
                         : 3.0 / v;
  result.tail_term = n * empty_street_probability(inputs.params, eps);
  result.total = result.hop_term + result.side_street_term + result.turn_term +
                 result.tail_term;
  result.tail_dominant = result.tail_term > 0.25 * result.total;
  return result;
}

double lower_bound(const BoundInputs& inputs) {
  check_common(inputs);
  const double n = n_real(inputs);
  const double p = inputs.params.p;
  const double q = inputs.params.q;
  const double delta = inputs.params.delta;
  const double exponent = inputs.radio_range ? (1.0 - delta / 2.0) : (1.0 - delta);
  return (p * p * p / 2.0) * inputs.hop_time * std::pow(n, exponent) *
         std::log(2.0 / q) / gamma_neg_delta(delta);
}

double lower_bound_pair(const BoundInputs& inputs) {
  check_common(inputs);
  return inputs.hop_time * inputs.params.p * n_real(inputs) *
         std::log(2.0 / inputs.params.q) / gamma_neg_delta(inputs.params.delta);
}

double turn_time_bound(std::int64_t n_i, std::int64_t n_j, double speed) {
  if (n_i < 0 || n_j < 0 || n_i + n_j <= 0)
    throw std::invalid_argument("turn time bound needs at least one node");
  if (!(speed > 0.0)) throw std::invalid_argument("speed must be positive");
  return 1.0 / (speed * static_cast<double>(n_i + n_j));
}

double poisson_uniform_bound(double hop_time, double speed) {
  if (!(hop_time > 0.0)) throw std::invalid_argument("hop time must be positive");
  if (!(speed > 0.0)) throw std::invalid_argument("speed must be positive");
  return 1.0 / speed + hop_time;
}

double empty_street_probability(const HyperfractalParams& params, double epsilon) {
  params.validate();
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must lie in (0,1)");
  const double n = static_cast<double>(params.n);
  return std::exp(-(params.q / 2.0) * std::pow(n, epsilon));
}

double empty_street_union_bound(const HyperfractalParams& params, double epsilon) {
  return static_cast<double>(params.n) * empty_street_probability(params, epsilon);
}

BoundSet evaluate_bounds(const BoundInputs& inputs, bool tight_turns) {
  check_common(inputs);
  BoundSet set;
  set.inputs = inputs;
  set.upper_direct = upper_bound_direct(inputs);
  set.upper_diverted = upper_bound_diverted(inputs, tight_turns);
  set.lower = lower_bound(inputs);
  set.busy_streets = busy_streets_asymptotic(inputs.params);
  if (gamma_near_singular(inputs.params.delta))
    set.notes.push_back("near-singular: delta within 0.05 of the uniform limit");
  if (set.upper_diverted.tail_dominant)
    set.notes.push_back(
        "tail-dominant: the empty-street allowance exceeds 25% of the diverted bound");
  if (set.upper_diverted.decaying_hop_term)
    set.notes.push_back("decaying hop term: radio exponent 1/2-delta+eps is negative");
  set.notes.push_back("order-scale: lower bound constant is not claimed sharp");
  return set;
}

}  // namespace hyperfractal::bounds

// Microbenchmarks for the hot paths: population sampling, crossing
// enumeration, the broadcast engine, the closed-form bounds, and the
// street-table fit.  Not registered with ctest; run the binary directly.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "hyperfractal/bounds.hpp"
#include "hyperfractal/broadcast.hpp"
#include "hyperfractal/fitting.hpp"
#include "hyperfractal/mobility.hpp"
#include "hyperfractal/params.hpp"
#include "hyperfractal/sampler.hpp"

namespace {

const hyperfractal::SpeedProfile kProfile =
    hyperfractal::SpeedProfile::constant(0.011111111111111112);

void BM_SamplePopulation(benchmark::State& state) {
  const auto params = hyperfractal::params_from_df(3.0, state.range(0), 5);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto population = hyperfractal::sample_population(params, seed++, kProfile);
    benchmark::DoNotOptimize(population.data());
  }
}
BENCHMARK(BM_SamplePopulation)->Arg(1000)->Arg(10000);

void BM_BusyStreetCensus(benchmark::State& state) {
  const auto params = hyperfractal::params_from_df(3.0, 10000, 12);
  const auto population = hyperfractal::sample_population(params, 7, kProfile);
  for (auto _ : state) {
    auto census = hyperfractal::busy_street_census(population);
    benchmark::DoNotOptimize(census.total_busy);
  }
}
BENCHMARK(BM_BusyStreetCensus);

void BM_CrossingEnumeration(benchmark::State& state) {
  hyperfractal::MobileNode node;
  node.street = {hyperfractal::Orientation::kHorizontal, 0, 0};
  node.position = 0.37;
  node.direction = 1;
  node.speed = 0.011111111111111112;
  for (auto _ : state) {
    double t = 0.0;
    for (int i = 0; i < 1000; ++i) t = hyperfractal::next_crossing_after(node, 0.625, t);
    benchmark::DoNotOptimize(t);
  }
}
BENCHMARK(BM_CrossingEnumeration);

void BM_BroadcastRun(benchmark::State& state) {
  const auto params = hyperfractal::params_from_df(3.0, state.range(0), 5);
  const auto population = hyperfractal::sample_population(params, 21, kProfile);
  hyperfractal::SimConfig config;
  config.hop_time = 0.06;
  config.source = population.front().id;
  for (auto _ : state) {
    auto result = hyperfractal::run(population, config);
    benchmark::DoNotOptimize(result.broadcast_time);
  }
}
BENCHMARK(BM_BroadcastRun)->Arg(200)->Arg(800);

void BM_EvaluateBounds(benchmark::State& state) {
  hyperfractal::bounds::BoundInputs inputs;
  inputs.params = hyperfractal::params_from_df(3.0, 800, 5);
  for (auto _ : state) {
    auto set = hyperfractal::bounds::evaluate_bounds(inputs);
    benchmark::DoNotOptimize(set.lower);
  }
}
BENCHMARK(BM_EvaluateBounds);

void BM_QuantizeAndFit(benchmark::State& state) {
  const auto params = hyperfractal::params_from_df(3.0, 100000, 8);
  hyperfractal::fitting::TableOptions options;
  options.levels = 8;
  options.per_street = true;
  options.noise = 0.1;
  options.seed = 5;
  options.with_hints = false;
  options.both_orientations = true;
  const auto table = hyperfractal::fitting::synthetic_street_table(params, options);
  for (auto _ : state) {
    auto streets = hyperfractal::fitting::quantize_streets(table, 2.0);
    auto fit = hyperfractal::fitting::fit_fractal_dimension(streets);
    benchmark::DoNotOptimize(fit.d_f_hat);
  }
}
BENCHMARK(BM_QuantizeAndFit);

}  // namespace

BENCHMARK_MAIN();

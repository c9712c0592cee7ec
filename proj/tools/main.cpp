// Command-line front end: population generation, broadcast simulation,
// parameter sweeps, closed-form bounds, and dimension fitting on
// street-traffic tables.  Every output is byte-deterministic for a given
// command line (and config file), so runs can be diffed.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hyperfractal/bounds.hpp"
#include "hyperfractal/broadcast.hpp"
#include "hyperfractal/fitting.hpp"
#include "hyperfractal/format.hpp"
#include "hyperfractal/mobility.hpp"
#include "hyperfractal/params.hpp"
#include "hyperfractal/rng.hpp"
#include "hyperfractal/sampler.hpp"
#include "hyperfractal/street.hpp"

namespace {

using json = nlohmann::ordered_json;
using hyperfractal::format_double;

// Output failures are environment problems, not bad input; they map to a
// different exit code than validation errors.
struct WriteError : std::exception {
  explicit WriteError(std::string m) : message(std::move(m)) {}
  const char* what() const noexcept override { return message.c_str(); }
  std::string message;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw WriteError("cannot open output file: " + path);
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw WriteError("write failed: " + path);
}

double kmh_to_units(double kmh, double unit_km) {
  if (unit_km <= 0.0) throw std::invalid_argument("unit_km must be positive");
  return kmh / 3600.0 / unit_km;
}

// ---------------------------------------------------------------------------
// Config file: JSON defaults applied to every option the user did not pass on
// the command line.  Flags given on the command line always win.

struct ConfigFile {
  nlohmann::json data;
  bool loaded = false;

  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    try {
      in >> data;
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("config file " + path + ": " + e.what());
    }
    if (!data.is_object())
      throw std::runtime_error("config file " + path + ": top level must be an object");
    loaded = true;
  }

  template <typename T>
  void apply(const CLI::Option* opt, const char* key, T& target) const {
    if (!loaded) return;
    if (opt != nullptr && opt->count() > 0) return;
    if (!data.contains(key)) return;
    try {
      target = data.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(std::string("config key '") + key + "': " + e.what());
    }
  }
};

// ---------------------------------------------------------------------------
// Shared option blocks.

struct ModelOptions {
  double df = 3.0;
  double p = -1.0;  // < 0: derive from df
  std::int64_t n = 200;
  int l_max = 5;
  std::uint64_t seed = 1;
  std::vector<double> speed_kmh = {40.0};
  std::string speed_order = "constant";
  double unit_km = 1.0;

  CLI::Option* opt_df = nullptr;
  CLI::Option* opt_p = nullptr;
  CLI::Option* opt_n = nullptr;
  CLI::Option* opt_l_max = nullptr;
  CLI::Option* opt_seed = nullptr;
  CLI::Option* opt_speed = nullptr;
  CLI::Option* opt_order = nullptr;
  CLI::Option* opt_unit = nullptr;

  void attach(CLI::App& app) {
    opt_df = app.add_option("--df", df, "Fractal dimension of the street layout (>= 2)")
                 ->capture_default_str();
    opt_p = app.add_option("--p", p,
                           "Top-level street weight in [0,1]; overrides --df when given");
    opt_n = app.add_option("--n", n, "Population size")->capture_default_str();
    opt_l_max = app.add_option("--l-max", l_max, "Deepest street level materialised")
                    ->capture_default_str();
    opt_seed = app.add_option("--seed", seed, "Master random seed")->capture_default_str();
    opt_speed = app.add_option("--speed-kmh", speed_kmh,
                               "Speed profile in km/h (one value, or one per level)")
                    ->delimiter(',')
                    ->capture_default_str();
    opt_order = app.add_option("--speed-order", speed_order,
                               "Speed profile shape: constant, increasing, decreasing")
                    ->check(CLI::IsMember({"constant", "increasing", "decreasing"}))
                    ->capture_default_str();
    opt_unit = app.add_option("--unit-km", unit_km, "Edge length of the unit square in km")
                   ->capture_default_str();
  }

  void apply_config(const ConfigFile& cf) {
    cf.apply(opt_df, "df", df);
    cf.apply(opt_p, "p", p);
    cf.apply(opt_n, "n", n);
    cf.apply(opt_l_max, "l_max", l_max);
    cf.apply(opt_seed, "seed", seed);
    cf.apply(opt_speed, "speed_kmh", speed_kmh);
    cf.apply(opt_order, "speed_order", speed_order);
    cf.apply(opt_unit, "unit_km", unit_km);
  }

  hyperfractal::HyperfractalParams make_params() const {
    if (p >= 0.0) return hyperfractal::params_from_p(p, n, l_max);
    return hyperfractal::params_from_df(df, n, l_max);
  }

  hyperfractal::SpeedProfile make_profile() const {
    std::vector<double> units;
    units.reserve(speed_kmh.size());
    for (double kmh : speed_kmh) units.push_back(kmh_to_units(kmh, unit_km));
    if (speed_order == "increasing")
      return hyperfractal::SpeedProfile::increasing_with_level(units);
    if (speed_order == "decreasing")
      return hyperfractal::SpeedProfile::decreasing_with_level(units);
    if (units.size() != 1)
      throw std::invalid_argument(
          "a constant speed profile takes exactly one --speed-kmh value");
    return hyperfractal::SpeedProfile::constant(units.front());
  }

  json resolved(const hyperfractal::HyperfractalParams& params) const {
    json j;
    j["d_f"] = params.d_f;
    j["p"] = params.p;
    j["q"] = params.q;
    j["delta"] = params.delta;
    j["n"] = params.n;
    j["l_max"] = params.l_max;
    j["seed"] = seed;
    j["speed_order"] = speed_order;
    j["speed_kmh"] = speed_kmh;
    j["unit_km"] = unit_km;
    return j;
  }
};

struct SimOptions {
  double hop = 0.06;
  std::string reach = "nn";
  double radio_range = 0.05;
  std::int64_t source = 0;
  std::string stop = "full";
  std::int64_t target = 0;
  double horizon = 0.0;
  std::vector<double> snapshot_times;

  CLI::Option* opt_hop = nullptr;
  CLI::Option* opt_reach = nullptr;
  CLI::Option* opt_radio = nullptr;
  CLI::Option* opt_source = nullptr;
  CLI::Option* opt_stop = nullptr;
  CLI::Option* opt_target = nullptr;
  CLI::Option* opt_horizon = nullptr;
  CLI::Option* opt_snaps = nullptr;

  void attach(CLI::App& app, bool with_stop_rule = true) {
    opt_hop = app.add_option("--hop", hop, "Transmission cycle length in seconds")
                  ->capture_default_str();
    opt_reach = app.add_option("--reach", reach,
                               "Transmission reach along a street: nn (nearest "
                               "neighbor) or radio (fixed range)")
                    ->check(CLI::IsMember({"nn", "radio"}))
                    ->capture_default_str();
    opt_radio = app.add_option("--radio-range", radio_range,
                               "Radio range in unit lengths (reach=radio only)")
                    ->capture_default_str();
    opt_source = app.add_option("--source", source,
                                "Source node id; -1 draws one uniformly from the seed")
                     ->capture_default_str();
    if (with_stop_rule) {
      opt_stop = app.add_option("--stop", stop,
                                "Stop rule: full (contamination), target, horizon")
                     ->check(CLI::IsMember({"full", "target", "horizon"}))
                     ->capture_default_str();
      opt_target = app.add_option("--target", target, "Target node id (stop=target)")
                       ->capture_default_str();
      opt_horizon = app.add_option("--horizon", horizon,
                                   "End time in seconds (stop=horizon), or safety "
                                   "horizon override for the other rules; 0 = automatic")
                        ->capture_default_str();
      opt_snaps = app.add_option("--snapshot-times", snapshot_times,
                                 "Instants at which to record the full node state")
                     ->delimiter(',');
    }
  }

  void apply_config(const ConfigFile& cf) {
    cf.apply(opt_hop, "hop", hop);
    cf.apply(opt_reach, "reach", reach);
    cf.apply(opt_radio, "radio_range", radio_range);
    cf.apply(opt_source, "source", source);
    cf.apply(opt_stop, "stop", stop);
    cf.apply(opt_target, "target", target);
    cf.apply(opt_horizon, "horizon", horizon);
    cf.apply(opt_snaps, "snapshot_times", snapshot_times);
  }

  hyperfractal::SimConfig make_config() const {
    hyperfractal::SimConfig config;
    config.hop_time = hop;
    config.reach = reach == "radio" ? hyperfractal::ReachMode::kRadioRange
                                    : hyperfractal::ReachMode::kNearestNeighbor;
    config.radio_range = reach == "radio" ? radio_range : 0.0;
    if (stop == "target") {
      config.stop.kind = hyperfractal::StopRule::Kind::kTargetNode;
      config.stop.target_node = target;
    } else if (stop == "horizon") {
      config.stop.kind = hyperfractal::StopRule::Kind::kHorizon;
    } else {
      config.stop.kind = hyperfractal::StopRule::Kind::kFullContamination;
    }
    config.stop.horizon = horizon;
    config.source = source;
    config.snapshot_times = snapshot_times;
    return config;
  }

  json resolved() const {
    json j;
    j["hop_time_s"] = hop;
    j["reach"] = reach;
    if (reach == "radio") j["radio_range"] = radio_range;
    j["source"] = source;
    j["stop"] = stop;
    if (stop == "target") j["target"] = target;
    j["horizon_s"] = horizon;
    j["snapshot_times"] = snapshot_times;
    return j;
  }
};

// ---------------------------------------------------------------------------
// Small shared emitters.

void emit_json(const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  auto out = open_output(path);
  out << text;
  finish_output(out, path);
}

void write_population_file(const hyperfractal::Population& population,
                           const std::string& path) {
  auto out = open_output(path);
  hyperfractal::write_population_jsonl(out, population);
  finish_output(out, path);
}

hyperfractal::Population load_population_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open population file: " + path);
  return hyperfractal::read_population_jsonl(in);
}

std::int64_t resolve_source(std::int64_t requested, const hyperfractal::Population& population,
                            std::uint64_t seed) {
  if (requested >= 0) return requested;
  if (population.empty()) throw std::invalid_argument("population is empty");
  hyperfractal::Rng rng(seed ^ 0xD1CEBEEFULL);
  const auto idx = rng.uniform_int(static_cast<std::int64_t>(population.size()));
  return population[static_cast<std::size_t>(idx)].id;
}

void write_infection_csv(const hyperfractal::SimResult& result, const std::string& path) {
  auto out = open_output(path);
  out << "id,infection_time_s\n";
  for (const auto& [id, time] : result.infection_time)
    out << id << ',' << format_double(time) << '\n';
  finish_output(out, path);
}

void write_snapshots_csv(const hyperfractal::SimResult& result, const std::string& path) {
  auto out = open_output(path);
  out << "time_s,id,orientation,level,index,position,direction,infected\n";
  for (const auto& snap : result.snapshots) {
    for (const auto& node : snap.nodes) {
      out << format_double(snap.time) << ',' << node.id << ','
          << hyperfractal::orientation_code(node.street.orientation) << ','
          << node.street.level << ',' << node.street.index << ','
          << format_double(node.position) << ',' << node.direction << ','
          << (node.infected ? 1 : 0) << '\n';
    }
  }
  finish_output(out, path);
}

void write_timeline_csv(const hyperfractal::SimResult& result, const std::string& path) {
  auto out = open_output(path);
  out << "orientation,level,index,time_s,clusters\n";
  for (const auto& [street, samples] : result.street_timelines) {
    for (const auto& sample : samples) {
      out << hyperfractal::orientation_code(street.orientation) << ',' << street.level
          << ',' << street.index << ',' << format_double(sample.time) << ','
          << sample.clusters << '\n';
    }
  }
  finish_output(out, path);
}

json census_json(const hyperfractal::HyperfractalParams& params,
                 const hyperfractal::BusyStreetStats& census) {
  json j;
  j["total_busy"] = census.total_busy;
  j["busy_east_west"] = census.busy_east_west;
  j["busy_north_south"] = census.busy_north_south;
  json levels = json::array();
  for (const auto& [level, occ] : census.per_level) {
    json row;
    row["level"] = level;
    row["busy"] = occ.busy;
    row["total"] = occ.total;
    levels.push_back(row);
  }
  j["per_level"] = levels;
  j["expected_busy_exact"] = hyperfractal::expected_busy_streets_exact(params);
  j["expected_busy_asymptotic"] = hyperfractal::bounds::busy_streets_asymptotic(params);
  return j;
}

json result_json(const hyperfractal::SimResult& result) {
  json j;
  j["broadcast_time_s"] = result.broadcast_time;
  j["censored"] = result.censored;
  j["diagnostic"] = result.diagnostic;
  j["horizon_s"] = result.horizon;
  std::int64_t infected = 0;
  for (const auto& entry : result.infection_time)
    if (std::isfinite(entry.second)) ++infected;
  j["infected"] = infected;
  j["population"] = static_cast<std::int64_t>(result.infection_time.size());
  j["hop_infections"] = result.hop_infections;
  j["handoff_infections"] = result.handoff_infections;
  j["crossing_events"] = result.crossing_events;
  j["snapshots"] = static_cast<std::int64_t>(result.snapshots.size());
  return j;
}

// ---------------------------------------------------------------------------
// Subcommands.

struct GenerateCmd {
  ModelOptions model;
  std::string config_path;
  std::string out_path = "population.jsonl";

  void attach(CLI::App& app) {
    model.attach(app);
    app.add_option("--config", config_path, "JSON file with defaults for unset options");
    app.add_option("--out", out_path, "Population file to write (JSON lines)")
        ->capture_default_str();
  }

  int run() {
    ConfigFile cf;
    if (!config_path.empty()) cf.load(config_path);
    model.apply_config(cf);

    const auto params = model.make_params();
    const auto profile = model.make_profile();
    const auto population = hyperfractal::sample_population(params, model.seed, profile);
    write_population_file(population, out_path);

    json j;
    j["config"] = model.resolved(params);
    j["config"]["population_file"] = out_path;
    j["census"] = census_json(params, hyperfractal::busy_street_census(population));
    emit_json(j, "");
    return 0;
  }
};

struct SimulateCmd {
  ModelOptions model;
  SimOptions sim;
  std::string config_path;
  std::string population_path;
  std::string summary_path = "summary.json";
  std::string infection_path;
  std::string snapshots_path;
  std::string timeline_path;

  void attach(CLI::App& app) {
    model.attach(app);
    sim.attach(app);
    app.add_option("--config", config_path, "JSON file with defaults for unset options");
    app.add_option("--population", population_path,
                   "Population file to simulate; omitted: sample one from the "
                   "model options");
    app.add_option("--summary", summary_path, "Summary JSON to write ('-' for stdout)")
        ->capture_default_str();
    app.add_option("--infection-csv", infection_path, "Per-node infection times CSV");
    app.add_option("--snapshots-csv", snapshots_path, "Node state at the snapshot times CSV");
    app.add_option("--timeline-csv", timeline_path,
                   "Per-street infected-cluster counts at the snapshot times CSV");
  }

  int run() {
    ConfigFile cf;
    if (!config_path.empty()) cf.load(config_path);
    model.apply_config(cf);
    sim.apply_config(cf);

    hyperfractal::Population population;
    json config;
    if (!population_path.empty()) {
      population = load_population_file(population_path);
      config["population_file"] = population_path;
      config["population"] = static_cast<std::int64_t>(population.size());
      config["seed"] = model.seed;
    } else {
      const auto params = model.make_params();
      population = hyperfractal::sample_population(params, model.seed, model.make_profile());
      config = model.resolved(params);
    }

    auto sim_config = sim.make_config();
    sim_config.source = resolve_source(sim.source, population, model.seed);
    const auto result = hyperfractal::run(population, sim_config);

    json sim_block = sim.resolved();
    sim_block["source"] = sim_config.source;
    json j;
    j["config"] = config;
    j["simulation"] = sim_block;
    j["result"] = result_json(result);

    emit_json(j, summary_path == "-" ? "" : summary_path);
    if (!infection_path.empty()) write_infection_csv(result, infection_path);
    if (!snapshots_path.empty()) write_snapshots_csv(result, snapshots_path);
    if (!timeline_path.empty()) write_timeline_csv(result, timeline_path);
    return 0;
  }
};

struct SnapshotsCmd {
  ModelOptions model;
  SimOptions sim;
  std::string config_path;
  std::string population_path;
  std::vector<double> times;
  std::string out_path;
  std::string timeline_path;
  std::string summary_path;

  void attach(CLI::App& app) {
    model.attach(app);
    sim.attach(app, /*with_stop_rule=*/false);
    app.add_option("--config", config_path, "JSON file with defaults for unset options");
    app.add_option("--population", population_path,
                   "Population file to simulate; omitted: sample one from the "
                   "model options");
    app.add_option("--times", times, "Snapshot instants in seconds")
        ->delimiter(',')
        ->required();
    app.add_option("--out", out_path, "Snapshot CSV to write")->required();
    app.add_option("--timeline-csv", timeline_path,
                   "Per-street infected-cluster counts CSV");
    app.add_option("--summary", summary_path, "Summary JSON ('-' for stdout)");
  }

  int run() {
    ConfigFile cf;
    if (!config_path.empty()) cf.load(config_path);
    model.apply_config(cf);
    sim.apply_config(cf);

    hyperfractal::Population population;
    json config;
    if (!population_path.empty()) {
      population = load_population_file(population_path);
      config["population_file"] = population_path;
      config["population"] = static_cast<std::int64_t>(population.size());
      config["seed"] = model.seed;
    } else {
      const auto params = model.make_params();
      population = hyperfractal::sample_population(params, model.seed, model.make_profile());
      config = model.resolved(params);
    }
    if (times.empty()) throw std::invalid_argument("--times must not be empty");

    // The run lasts exactly as long as the observation plan.
    auto sim_config = sim.make_config();
    sim_config.stop.kind = hyperfractal::StopRule::Kind::kHorizon;
    sim_config.stop.horizon = *std::max_element(times.begin(), times.end());
    sim_config.snapshot_times = times;
    sim_config.source = resolve_source(sim.source, population, model.seed);

    const auto result = hyperfractal::run(population, sim_config);
    write_snapshots_csv(result, out_path);
    if (!timeline_path.empty()) write_timeline_csv(result, timeline_path);
    if (!summary_path.empty()) {
      json sim_block = sim.resolved();
      sim_block["source"] = sim_config.source;
      sim_block["stop"] = "horizon";
      sim_block["horizon_s"] = sim_config.stop.horizon;
      sim_block["snapshot_times"] = times;
      json j;
      j["config"] = config;
      j["simulation"] = sim_block;
      j["result"] = result_json(result);
      emit_json(j, summary_path == "-" ? "" : summary_path);
    }
    return 0;
  }
};

struct SweepCmd {
  ModelOptions model;
  SimOptions sim;
  std::string config_path;
  std::vector<double> df_list = {3.0};
  std::vector<std::int64_t> n_list;
  int replications = 20;
  int jobs = 1;
  double epsilon = 0.1;
  bool tight_turns = false;
  std::string out_path = "sweep.csv";

  CLI::Option* opt_df_list = nullptr;
  CLI::Option* opt_n_list = nullptr;
  CLI::Option* opt_reps = nullptr;
  CLI::Option* opt_jobs = nullptr;
  CLI::Option* opt_eps = nullptr;

  void attach(CLI::App& app) {
    model.attach(app);
    sim.attach(app, /*with_stop_rule=*/false);
    app.add_option("--config", config_path, "JSON file with defaults for unset options");
    opt_df_list = app.add_option("--df-list", df_list, "Fractal dimensions to sweep")
                      ->delimiter(',')
                      ->capture_default_str();
    opt_n_list = app.add_option("--n-list", n_list, "Population sizes to sweep")
                     ->delimiter(',')
                     ->required();
    opt_reps = app.add_option("--replications", replications, "Runs per (d_f, n) cell")
                   ->capture_default_str();
    opt_jobs = app.add_option("--jobs", jobs,
                              "Worker threads; results are merged by replication "
                              "index, so the output is identical for any value")
                   ->capture_default_str();
    opt_eps = app.add_option("--epsilon", epsilon, "Slack exponent for the diverted bound")
                  ->capture_default_str();
    app.add_flag("--tight-turns", tight_turns,
                 "Use the per-intersection turn bound in the diverted total");
    app.add_option("--out", out_path, "Sweep CSV to write")->capture_default_str();
  }

  int run() {
    ConfigFile cf;
    if (!config_path.empty()) cf.load(config_path);
    model.apply_config(cf);
    sim.apply_config(cf);
    cf.apply(opt_df_list, "df_list", df_list);
    cf.apply(opt_n_list, "n_list", n_list);
    cf.apply(opt_reps, "replications", replications);
    cf.apply(opt_jobs, "jobs", jobs);
    cf.apply(opt_eps, "epsilon", epsilon);

    if (df_list.empty() || n_list.empty())
      throw std::invalid_argument("--df-list and --n-list must not be empty");
    if (replications < 1) throw std::invalid_argument("--replications must be >= 1");
    if (jobs < 1) throw std::invalid_argument("--jobs must be >= 1");

    std::sort(df_list.begin(), df_list.end());
    std::sort(n_list.begin(), n_list.end());
    const auto profile = model.make_profile();

    struct Task {
      std::size_t df_idx = 0;
      std::size_t n_idx = 0;
      int rep = 0;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < df_list.size(); ++i)
      for (std::size_t j = 0; j < n_list.size(); ++j)
        for (int r = 0; r < replications; ++r) tasks.push_back({i, j, r});

    struct TaskResult {
      double time = 0.0;
      bool censored = false;
    };
    std::vector<TaskResult> results(tasks.size());

    auto worker_body = [&](std::size_t task_index) {
      const Task& task = tasks[task_index];
      const auto params = hyperfractal::params_from_df(
          df_list[task.df_idx], n_list[task.n_idx], model.l_max);
      const std::uint64_t run_seed =
          hyperfractal::Rng::for_replication(model.seed, task_index).next_u64();
      const auto population = hyperfractal::sample_population(params, run_seed, profile);
      auto sim_config = sim.make_config();
      sim_config.stop.kind = hyperfractal::StopRule::Kind::kFullContamination;
      sim_config.source = population.front().id;
      const auto result = hyperfractal::run(population, sim_config);
      results[task_index] = {result.broadcast_time, result.censored};
    };

    if (jobs == 1) {
      for (std::size_t i = 0; i < tasks.size(); ++i) worker_body(i);
    } else {
      std::atomic<std::size_t> cursor{0};
      std::vector<std::thread> pool;
      const std::size_t threads =
          std::min(static_cast<std::size_t>(jobs), tasks.size());
      pool.reserve(threads);
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            worker_body(i);
          }
        });
      }
      for (auto& t : pool) t.join();
    }

    struct Cell {
      double mean = 0.0;
      double ci_low = 0.0;
      double ci_high = 0.0;
      std::int64_t valid = 0;
      std::int64_t censored = 0;
    };
    std::vector<Cell> cells(df_list.size() * n_list.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      auto& cell = cells[tasks[t].df_idx * n_list.size() + tasks[t].n_idx];
      if (results[t].censored) {
        ++cell.censored;
      } else {
        cell.mean += results[t].time;
        ++cell.valid;
      }
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto& cell = cells[c];
      if (cell.valid == 0) continue;
      cell.mean /= static_cast<double>(cell.valid);
      double ss = 0.0;
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].df_idx * n_list.size() + tasks[t].n_idx != c) continue;
        if (results[t].censored) continue;
        const double d = results[t].time - cell.mean;
        ss += d * d;
      }
      const double sd = cell.valid > 1 ? std::sqrt(ss / static_cast<double>(cell.valid - 1)) : 0.0;
      const double half = 1.96 * sd / std::sqrt(static_cast<double>(cell.valid));
      cell.ci_low = cell.mean - half;
      cell.ci_high = cell.mean + half;
    }

    // One scaling slope per dimension: log mean broadcast time on log n.
    std::vector<double> slopes(df_list.size(),
                               std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < df_list.size(); ++i) {
      std::vector<double> lx, ly;
      for (std::size_t j = 0; j < n_list.size(); ++j) {
        const auto& cell = cells[i * n_list.size() + j];
        if (cell.valid == 0 || cell.mean <= 0.0) continue;
        lx.push_back(std::log(static_cast<double>(n_list[j])));
        ly.push_back(std::log(cell.mean));
      }
      if (lx.size() < 2) continue;
      double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
      for (std::size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
      }
      const double m = static_cast<double>(lx.size());
      slopes[i] = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }

    auto out = open_output(out_path);
    out << "d_f,n,replications,valid_runs,censored_runs,mean_broadcast_s,"
           "ci95_low_s,ci95_high_s,lower_bound_s,upper_direct_s,upper_diverted_s,"
           "slope_log_mean_vs_log_n\n";
    for (std::size_t i = 0; i < df_list.size(); ++i) {
      for (std::size_t j = 0; j < n_list.size(); ++j) {
        const auto& cell = cells[i * n_list.size() + j];
        hyperfractal::bounds::BoundInputs inputs;
        inputs.params = hyperfractal::params_from_df(df_list[i], n_list[j], model.l_max);
        inputs.hop_time = sim.hop;
        inputs.speed = profile.min_speed();
        inputs.epsilon = epsilon;
        inputs.radio_range = sim.reach == "radio";
        const auto bounds = hyperfractal::bounds::evaluate_bounds(inputs, tight_turns);
        out << format_double(df_list[i]) << ',' << n_list[j] << ',' << replications
            << ',' << cell.valid << ',' << cell.censored << ','
            << format_double(cell.mean) << ',' << format_double(cell.ci_low) << ','
            << format_double(cell.ci_high) << ',' << format_double(bounds.lower) << ','
            << format_double(bounds.upper_direct) << ','
            << format_double(bounds.upper_diverted.total) << ','
            << format_double(slopes[i]) << '\n';
      }
    }
    finish_output(out, out_path);

    json j;
    j["config"] = model.resolved(model.make_params());
    j["config"].erase("d_f");
    j["config"].erase("p");
    j["config"].erase("q");
    j["config"].erase("delta");
    j["config"].erase("n");
    j["config"]["df_list"] = df_list;
    j["config"]["n_list"] = n_list;
    j["config"]["replications"] = replications;
    j["config"]["epsilon"] = epsilon;
    j["config"]["hop_time_s"] = sim.hop;
    j["config"]["reach"] = sim.reach;
    j["config"]["out"] = out_path;
    json slope_block = json::object();
    for (std::size_t i = 0; i < df_list.size(); ++i)
      slope_block[format_double(df_list[i])] = slopes[i];
    j["slope_log_mean_vs_log_n"] = slope_block;
    emit_json(j, "");
    return 0;
  }
};

struct BoundsCmd {
  ModelOptions model;
  std::string config_path;
  double hop = 0.06;
  double epsilon = 0.1;
  bool radio = false;
  bool tight_turns = false;
  std::string out_path;

  CLI::Option* opt_hop = nullptr;
  CLI::Option* opt_eps = nullptr;

  void attach(CLI::App& app) {
    model.attach(app);
    app.add_option("--config", config_path, "JSON file with defaults for unset options");
    opt_hop = app.add_option("--hop", hop, "Transmission cycle length in seconds")
                  ->capture_default_str();
    opt_eps = app.add_option("--epsilon", epsilon, "Slack exponent for the diverted bound")
                  ->capture_default_str();
    app.add_flag("--radio", radio, "Evaluate the finite-radio-range variants");
    app.add_flag("--tight-turns", tight_turns,
                 "Use the per-intersection turn bound in the diverted total");
    app.add_option("--out", out_path, "Report JSON to write (default: stdout)");
  }

  int run() {
    ConfigFile cf;
    if (!config_path.empty()) cf.load(config_path);
    model.apply_config(cf);
    cf.apply(opt_hop, "hop", hop);
    cf.apply(opt_eps, "epsilon", epsilon);

    const auto params = model.make_params();
    const auto profile = model.make_profile();
    hyperfractal::bounds::BoundInputs inputs;
    inputs.params = params;
    inputs.hop_time = hop;
    inputs.speed = profile.min_speed();
    inputs.epsilon = epsilon;
    inputs.radio_range = radio;
    const auto set = hyperfractal::bounds::evaluate_bounds(inputs, tight_turns);

    json j;
    j["config"] = model.resolved(params);
    j["config"]["hop_time_s"] = hop;
    j["config"]["epsilon"] = epsilon;
    j["config"]["radio"] = radio;
    j["config"]["tight_turns"] = tight_turns;
    j["config"]["speed_units_per_s"] = inputs.speed;
    j["gamma_neg_delta"] = hyperfractal::bounds::gamma_neg_delta(params.delta);
    j["busy_streets_asymptotic"] = set.busy_streets;
    j["busy_streets_exact"] = hyperfractal::expected_busy_streets_exact(params);
    json crit;
    try {
      crit = hyperfractal::critical_level(params, epsilon, radio);
    } catch (const std::domain_error&) {
      crit = nullptr;
    }
    j["critical_level"] = crit;
    j["lower_bound_s"] = set.lower;
    j["lower_bound_pair_s"] = hyperfractal::bounds::lower_bound_pair(inputs);
    j["upper_direct_s"] = set.upper_direct;
    json diverted;
    diverted["hop_term_s"] = set.upper_diverted.hop_term;
    diverted["side_street_term_s"] = set.upper_diverted.side_street_term;
    diverted["turn_term_s"] = set.upper_diverted.turn_term;
    diverted["tail_term_s"] = set.upper_diverted.tail_term;
    diverted["total_s"] = set.upper_diverted.total;
    diverted["tail_dominant"] = set.upper_diverted.tail_dominant;
    diverted["decaying_hop_term"] = set.upper_diverted.decaying_hop_term;
    j["upper_diverted"] = diverted;
    j["poisson_uniform_s"] =
        hyperfractal::bounds::poisson_uniform_bound(hop, inputs.speed);
    j["empty_street_probability"] =
        hyperfractal::bounds::empty_street_probability(params, epsilon);
    j["empty_street_union_bound"] =
        hyperfractal::bounds::empty_street_union_bound(params, epsilon);
    j["notes"] = set.notes;
    emit_json(j, out_path);
    return 0;
  }
};

struct FitCmd {
  std::string config_path;
  std::string csv_path;
  double quantize_factor = 2.0;
  double tail_fraction = 0.5;
  double xi_scale = 1.0;
  std::string report_path;
  std::string curve_path;
  std::string streets_path;

  CLI::Option* opt_quant = nullptr;
  CLI::Option* opt_tail = nullptr;
  CLI::Option* opt_xi = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON file with defaults for unset options");
    app.add_option("--csv", csv_path,
                   "Street-traffic table "
                   "(segment_id,street_hint,length_km,density_veh_per_km)")
        ->required();
    opt_quant = app.add_option("--quantize-factor", quantize_factor,
                               "Density ratio tolerated within one street (A >= 1)")
                    ->capture_default_str();
    opt_tail = app.add_option("--tail-fraction", tail_fraction,
                              "Fraction of the cumulated curve used by the regression")
                   ->capture_default_str();
    opt_xi = app.add_option("--xi-scale", xi_scale,
                            "Multiplier applied to the cumulated length in the "
                            "curve CSV (presentation only; the fit is invariant)")
                 ->capture_default_str();
    app.add_option("--report", report_path, "Fit report JSON (default: stdout)");
    app.add_option("--curve-csv", curve_path, "Cumulated density curve CSV");
    app.add_option("--streets-csv", streets_path, "Quantized street list CSV");
  }

  int run() {
    ConfigFile cf;
    if (!config_path.empty()) cf.load(config_path);
    cf.apply(opt_quant, "quantize_factor", quantize_factor);
    cf.apply(opt_tail, "tail_fraction", tail_fraction);
    cf.apply(opt_xi, "xi_scale", xi_scale);

    const auto segments = hyperfractal::fitting::read_segments_csv(csv_path);
    const auto streets = hyperfractal::fitting::quantize_streets(segments, quantize_factor);
    const auto fit = hyperfractal::fitting::fit_fractal_dimension(streets, tail_fraction);

    json j;
    j["config"]["csv"] = csv_path;
    j["config"]["quantize_factor"] = quantize_factor;
    j["config"]["tail_fraction"] = tail_fraction;
    j["config"]["xi_scale"] = xi_scale;
    j["segments"] = static_cast<std::int64_t>(segments.size());
    j["streets"] = static_cast<std::int64_t>(streets.size());
    j["d_f_hat"] = fit.d_f_hat;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["warnings"] = fit.warnings;
    emit_json(j, report_path);

    if (!curve_path.empty()) {
      auto out = open_output(curve_path);
      out << "cumulated_length_km,density_veh_per_km\n";
      for (const auto& [xi, lambda] : fit.cumulated_curve)
        out << format_double(xi * xi_scale) << ',' << format_double(lambda) << '\n';
      finish_output(out, curve_path);
    }
    if (!streets_path.empty()) {
      auto out = open_output(streets_path);
      out << "street_id,total_length_km,density_veh_per_km,member_segments\n";
      for (const auto& street : streets) {
        out << street.street_id << ',' << format_double(street.total_length_km) << ','
            << format_double(street.density) << ',';
        for (std::size_t i = 0; i < street.member_segments.size(); ++i) {
          if (i > 0) out << ';';
          out << street.member_segments[i];
        }
        out << '\n';
      }
      finish_output(out, streets_path);
    }
    return 0;
  }
};

// Regenerates the checked-in measured-table stand-ins.  Constants are frozen:
// changing any of them (or the seeds) changes the fixtures, and with them the
// fit values the acceptance tests pin down.
struct FixturesCmd {
  std::string out_dir = "fixtures";

  static constexpr std::int64_t kNodes = 40000;
  static constexpr int kLevels = 8;
  static constexpr double kNoise = 0.15;
  static constexpr double kQuantizeFactor = 2.0;

  struct Fixture {
    const char* name;
    double d_f;
    std::uint64_t seed;
  };

  void attach(CLI::App& app) {
    app.add_option("--out-dir", out_dir, "Directory for the fixture CSVs")
        ->capture_default_str();
  }

  int run() {
    const Fixture fixtures[] = {
        {"seattle_like", 2.3, 15},
        {"minneapolis_like", 2.9, 7},
    };
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw WriteError("cannot create directory " + out_dir + ": " + ec.message());
    json report;
    for (const auto& fixture : fixtures) {
      const auto params =
          hyperfractal::params_from_df(fixture.d_f, kNodes, kLevels);
      hyperfractal::fitting::TableOptions options;
      options.levels = kLevels;
      options.per_street = true;
      options.segments_per_street = 1;
      options.noise = kNoise;
      options.seed = fixture.seed;
      options.with_hints = false;
      options.both_orientations = true;
      const auto table = hyperfractal::fitting::synthetic_street_table(params, options);

      const std::string path = out_dir + "/" + fixture.name + ".csv";
      auto out = open_output(path);
      out << "segment_id,street_hint,length_km,density_veh_per_km\n";
      for (const auto& segment : table) {
        out << segment.segment_id << ',' << segment.street_hint << ','
            << format_double(segment.length_km) << ',' << format_double(segment.density)
            << '\n';
      }
      finish_output(out, path);

      const auto fit = hyperfractal::fitting::fit_fractal_dimension(
          hyperfractal::fitting::quantize_streets(table, kQuantizeFactor));
      json entry;
      entry["file"] = path;
      entry["d_f"] = fixture.d_f;
      entry["seed"] = fixture.seed;
      entry["d_f_hat"] = fit.d_f_hat;
      entry["r_squared"] = fit.r_squared;
      report[fixture.name] = entry;
    }
    emit_json(report, "");
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Street-grid broadcast simulator and fractal-dimension fitting toolkit"};
  app.require_subcommand(1);

  GenerateCmd generate;
  SimulateCmd simulate;
  SnapshotsCmd snapshots;
  SweepCmd sweep;
  BoundsCmd bounds;
  FitCmd fit;
  FixturesCmd fixtures;

  generate.attach(*app.add_subcommand(
      "generate", "Sample a population and report its busy-street census"));
  simulate.attach(*app.add_subcommand(
      "simulate", "Run one epidemic broadcast over a population"));
  snapshots.attach(*app.add_subcommand(
      "snapshots", "Record node states at fixed instants of one broadcast"));
  sweep.attach(*app.add_subcommand(
      "sweep", "Replicate broadcasts over a (d_f, n) grid and tabulate means"));
  bounds.attach(*app.add_subcommand(
      "bounds", "Evaluate the closed-form broadcast-time bounds"));
  fit.attach(*app.add_subcommand(
      "fit", "Estimate the fractal dimension from a street-traffic table"));
  fixtures.attach(*app.add_subcommand(
      "fixtures", "Regenerate the bundled street-table fixtures"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("generate")) return generate.run();
    if (app.got_subcommand("simulate")) return simulate.run();
    if (app.got_subcommand("snapshots")) return snapshots.run();
    if (app.got_subcommand("sweep")) return sweep.run();
    if (app.got_subcommand("bounds")) return bounds.run();
    if (app.got_subcommand("fit")) return fit.run();
    if (app.got_subcommand("fixtures")) return fixtures.run();
  } catch (const WriteError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

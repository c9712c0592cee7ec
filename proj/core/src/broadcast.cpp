#include "hyperfractal/broadcast.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "hyperfractal/rng.hpp"

namespace hyperfractal {
namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Lower kind processes first at equal times: a snapshot captures the state
// immediately before the instant's changes, and crossings precede hop cycles.
enum EventKind : int { kSnapshotEvent = 0, kCrossingArrival = 1, kHopCycle = 2 };

struct Event {
  double time = 0.0;
  int kind = 0;
  std::int64_t primary = 0;   // carrier node index / snapshot index / cycle number
  std::int32_t street = 0;    // crossing events: target street index
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    if (a.primary != b.primary) return a.primary > b.primary;
    return a.street > b.street;
  }
};

struct StreetRuntime {
  Street street;
  std::vector<std::int32_t> members;   // population indexes, ascending
  std::vector<std::int32_t> infected;  // population indexes, infection order
  std::int64_t healthy = 0;
};

enum class InfectionCause { kSource, kHopTransmission, kHandoff };

class Engine {
 public:
  Engine(const Population& population, const SimConfig& config)
      : pop_(population), cfg_(config) {
    validate_inputs();
    index_population();
    resolve_horizon();
  }

  SimResult run() {
    result_.infection_time.clear();
    infect(source_index_, 0.0, InfectionCause::kSource);
    for (std::size_t i = 0; i < cfg_.snapshot_times.size(); ++i) {
      const double t = cfg_.snapshot_times[i];
      if (t <= horizon_) {
        queue_.push({t, kSnapshotEvent, static_cast<std::int64_t>(i), 0});
      }
    }
    if (!stopped_ && cfg_.hop_time <= horizon_) {
      queue_.push({cfg_.hop_time, kHopCycle, 1, 0});
    }
    while (!stopped_ && !queue_.empty()) {
      const Event ev = queue_.top();
      queue_.pop();
      switch (ev.kind) {
        case kSnapshotEvent:
          take_snapshot(ev.time);
          break;
        case kCrossingArrival:
          process_crossing(ev.time, static_cast<std::int32_t>(ev.primary), ev.street);
          break;
        case kHopCycle:
          process_hop_cycle(ev.time, ev.primary);
          break;
      }
    }
    finalize();
    return std::move(result_);
  }

 private:
  void validate_inputs() {
    if (pop_.empty()) throw std::invalid_argument("broadcast: population is empty");
    if (!(cfg_.hop_time > 0.0) || !std::isfinite(cfg_.hop_time)) {
      throw std::invalid_argument("broadcast: hop_time must be positive");
    }
    if (cfg_.reach == ReachMode::kRadioRange &&
        !(cfg_.radio_range > 0.0 && cfg_.radio_range <= 1.0)) {
      throw std::invalid_argument("broadcast: radio_range must lie in (0,1]");
    }
    if (cfg_.stop.kind == StopRule::Kind::kHorizon &&
        !(cfg_.stop.horizon > 0.0 && std::isfinite(cfg_.stop.horizon))) {
      throw std::invalid_argument("broadcast: horizon stop rule needs a positive horizon");
    }
    for (double t : cfg_.snapshot_times) {
      if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("broadcast: snapshot times must be nonnegative");
      }
    }
    if (cfg_.stop_window && !(cfg_.stop_window->half_width >= 0.0)) {
      throw std::invalid_argument("broadcast: stop window half width must be nonnegative");
    }
    for (const MobileNode& node : pop_) {
      if (!(node.position >= 0.0 && node.position <= 1.0) ||
          !(node.speed > 0.0 && std::isfinite(node.speed)) ||
          (node.direction != 1 && node.direction != -1)) {
        throw std::invalid_argument("broadcast: malformed node state");
      }
    }
  }

  void index_population() {
    const std::size_t n = pop_.size();
    infected_at_.assign(n, kInfinity);
    street_of_.assign(n, -1);

    std::unordered_map<std::int64_t, std::int32_t> id_to_index;
    id_to_index.reserve(n * 2);
    std::unordered_map<Street, std::int32_t, StreetHash> street_index;
    street_index.reserve(n * 2);
    std::vector<Street> keys;
    for (std::size_t i = 0; i < n; ++i) {
      if (!id_to_index.emplace(pop_[i].id, static_cast<std::int32_t>(i)).second) {
        throw std::invalid_argument("broadcast: duplicate node id");
      }
      if (street_index.emplace(pop_[i].street, 0).second) keys.push_back(pop_[i].street);
    }
    std::sort(keys.begin(), keys.end());
    streets_.resize(keys.size());
    for (std::size_t s = 0; s < keys.size(); ++s) {
      streets_[s].street = keys[s];
      street_index[keys[s]] = static_cast<std::int32_t>(s);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::int32_t s = street_index[pop_[i].street];
      street_of_[i] = s;
      streets_[s].members.push_back(static_cast<std::int32_t>(i));
      streets_[s].healthy++;
    }
    for (std::size_t s = 0; s < streets_.size(); ++s) {
      const int o = static_cast<int>(streets_[s].street.orientation);
      // A carrier with orientation o crosses the opposite-orientation streets.
      perpendicular_of_[1 - o].push_back(static_cast<std::int32_t>(s));
    }

    auto source_it = id_to_index.find(cfg_.source);
    if (source_it == id_to_index.end()) {
      throw std::invalid_argument("broadcast: source node id not present");
    }
    source_index_ = source_it->second;
    if (cfg_.stop.kind == StopRule::Kind::kTargetNode) {
      auto target_it = id_to_index.find(cfg_.stop.target_node);
      if (target_it == id_to_index.end()) {
        throw std::invalid_argument("broadcast: target node id not present");
      }
      target_index_ = target_it->second;
    }
    id_order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) id_order_[i] = static_cast<std::int32_t>(i);
    std::sort(id_order_.begin(), id_order_.end(),
              [this](std::int32_t a, std::int32_t b) { return pop_[a].id < pop_[b].id; });
  }

  void resolve_horizon() {
    if (cfg_.stop.kind == StopRule::Kind::kHorizon) {
      horizon_ = cfg_.stop.horizon;
    } else if (cfg_.stop.horizon > 0.0) {
      horizon_ = cfg_.stop.horizon;
    } else {
      double min_speed = kInfinity;
      for (const MobileNode& node : pop_) min_speed = std::min(min_speed, node.speed);
      horizon_ = 10.0 * (cfg_.hop_time * static_cast<double>(pop_.size()) + 1.0 / min_speed);
    }
    result_.horizon = horizon_;
  }

  void infect(std::int32_t index, double time, InfectionCause cause) {
    infected_at_[index] = time;
    ++infected_count_;
    result_.broadcast_time = time;  // event times are nondecreasing
    if (cause == InfectionCause::kHopTransmission) ++result_.hop_infections;
    if (cause == InfectionCause::kHandoff) ++result_.handoff_infections;

    const std::int32_t s = street_of_[index];
    streets_[s].infected.push_back(index);
    streets_[s].healthy--;
    active_streets_.insert(s);

    const MobileNode& node = pop_[index];
    const int o = static_cast<int>(node.street.orientation);
    for (std::int32_t ps : perpendicular_of_[o]) {
      if (streets_[ps].healthy <= 0) continue;
      const double tc = next_crossing_after(node, streets_[ps].street.coordinate(), time);
      if (tc <= horizon_) queue_.push({tc, kCrossingArrival, index, ps});
    }

    if (cfg_.stop_window && !result_.window_hit_time &&
        node.street == cfg_.stop_window->street) {
      const double pos = position_at(node, time).position;
      if (std::fabs(pos - cfg_.stop_window->center) <= cfg_.stop_window->half_width) {
        result_.window_hit_time = time;
        stopped_ = true;
      }
    }
    if (cfg_.stop.kind == StopRule::Kind::kFullContamination &&
        infected_count_ == static_cast<std::int64_t>(pop_.size())) {
      stopped_ = true;
    }
    if (cfg_.stop.kind == StopRule::Kind::kTargetNode && index == target_index_) {
      stopped_ = true;
    }
  }

  void process_crossing(double time, std::int32_t carrier, std::int32_t street_idx) {
    ++result_.crossing_events;
    StreetRuntime& street = streets_[street_idx];
    // Position of the intersection along the perpendicular street is the
    // carrier street's fixed coordinate.
    const double handoff_pos = pop_[carrier].street.coordinate();
    if (street.healthy > 0) {
      if (cfg_.reach == ReachMode::kNearestNeighbor) {
        // The single nearest node, whatever its state; already-infected means
        // no new infection.
        std::int32_t best = -1;
        double best_distance = kInfinity;
        std::int64_t best_id = 0;
        for (std::int32_t m : street.members) {
          const double d = std::fabs(position_at(pop_[m], time).position - handoff_pos);
          if (d < best_distance || (d == best_distance && pop_[m].id < best_id)) {
            best = m;
            best_distance = d;
            best_id = pop_[m].id;
          }
        }
        if (best >= 0 && infected_at_[best] == kInfinity) {
          infect(best, time, InfectionCause::kHandoff);
        }
      } else {
        for (std::int32_t m : street.members) {
          if (infected_at_[m] != kInfinity) continue;
          if (std::fabs(position_at(pop_[m], time).position - handoff_pos) <=
              cfg_.radio_range) {
            infect(m, time, InfectionCause::kHandoff);
            if (stopped_) break;
          }
        }
      }
    }
    if (stopped_ || street.healthy <= 0) return;  // stream ends: nothing left to reach
    const double tc = next_crossing_after(pop_[carrier], street.street.coordinate(), time);
    if (tc <= horizon_) queue_.push({tc, kCrossingArrival, carrier, street_idx});
  }

  struct OrderedNode {
    double position;
    std::int32_t index;
    std::int8_t state;  // 0 healthy, 1 transmitter, 2 infected this instant
  };

  void process_hop_cycle(double time, std::int64_t cycle) {
    for (std::int32_t s_idx : active_streets_) {
      StreetRuntime& street = streets_[s_idx];
      if (street.healthy <= 0) continue;
      bool has_transmitter = false;
      for (std::int32_t m : street.infected) {
        if (infected_at_[m] < time) {
          has_transmitter = true;
          break;
        }
      }
      if (!has_transmitter) continue;
      transmit_on_street(street, time);
      if (stopped_) return;
    }
    if (infected_count_ < static_cast<std::int64_t>(pop_.size()) &&
        time + cfg_.hop_time <= horizon_) {
      queue_.push({time + cfg_.hop_time, kHopCycle, cycle + 1, 0});
    }
  }

  void transmit_on_street(StreetRuntime& street, double time) {
    std::vector<OrderedNode> order;
    order.reserve(street.members.size());
    for (std::int32_t m : street.members) {
      std::int8_t state = 0;
      if (infected_at_[m] < time) {
        state = 1;
      } else if (infected_at_[m] != kInfinity) {
        state = 2;
      }
      order.push_back({position_at(pop_[m], time).position, m, state});
    }
    std::sort(order.begin(), order.end(), [this](const OrderedNode& a, const OrderedNode& b) {
      if (a.position != b.position) return a.position < b.position;
      return pop_[a.index].id < pop_[b.index].id;
    });
    const std::size_t m = order.size();
    std::vector<char> marked(m, 0);

    if (cfg_.reach == ReachMode::kNearestNeighbor) {
      // next_healthy[i]: smallest j >= i with a healthy node (m when none).
      std::vector<std::int32_t> next_healthy(m + 1, static_cast<std::int32_t>(m));
      std::vector<std::int32_t> prev_healthy(m + 1, -1);
      for (std::size_t i = m; i-- > 0;) {
        next_healthy[i] = (order[i].state == 0) ? static_cast<std::int32_t>(i)
                                                : next_healthy[i + 1];
      }
      for (std::size_t i = 0; i < m; ++i) {
        prev_healthy[i + 1] = (order[i].state == 0) ? static_cast<std::int32_t>(i)
                                                    : prev_healthy[i];
      }
      for (std::size_t i = 0; i < m; ++i) {
        if (order[i].state != 1) continue;
        const std::int32_t up = next_healthy[i + 1];
        if (up < static_cast<std::int32_t>(m)) marked[up] = 1;
        const std::int32_t down = prev_healthy[i];
        if (down >= 0) marked[down] = 1;
      }
    } else {
      // Merge the transmitters' coverage intervals, then sweep once.
      std::vector<std::pair<double, double>> spans;
      for (const OrderedNode& node : order) {
        if (node.state != 1) continue;
        const double lo = node.position - cfg_.radio_range;
        const double hi = node.position + cfg_.radio_range;
        if (!spans.empty() && lo <= spans.back().second) {
          spans.back().second = std::max(spans.back().second, hi);
        } else {
          spans.emplace_back(lo, hi);
        }
      }
      std::size_t span = 0;
      for (std::size_t i = 0; i < m && span < spans.size(); ++i) {
        while (span < spans.size() && spans[span].second < order[i].position) ++span;
        if (span == spans.size()) break;
        if (order[i].state == 0 && order[i].position >= spans[span].first) marked[i] = 1;
      }
    }

    for (std::size_t i = 0; i < m; ++i) {
      if (!marked[i]) continue;
      infect(order[i].index, time, InfectionCause::kHopTransmission);
      if (stopped_) return;
    }
  }

  // Counts maximal runs of infected nodes in position order; 0 when none.
  int cluster_count(const StreetRuntime& street, double time) const {
    std::vector<std::pair<double, std::int32_t>> order;
    order.reserve(street.members.size());
    for (std::int32_t m : street.members) {
      order.emplace_back(position_at(pop_[m], time).position, m);
    }
    std::sort(order.begin(), order.end(),
              [this](const std::pair<double, std::int32_t>& a,
                     const std::pair<double, std::int32_t>& b) {
                if (a.first != b.first) return a.first < b.first;
                return pop_[a.second].id < pop_[b.second].id;
              });
    int clusters = 0;
    bool in_run = false;
    for (const auto& [pos, m] : order) {
      const bool infected = infected_at_[m] != kInfinity;
      if (infected && !in_run) ++clusters;
      in_run = infected;
    }
    return clusters;
  }

  void take_snapshot(double time) {
    Snapshot snap;
    snap.time = time;
    snap.nodes.reserve(pop_.size());
    for (std::int32_t i : id_order_) {
      const MotionState state = position_at(pop_[i], time);
      snap.nodes.push_back({pop_[i].id, pop_[i].street, state.position, state.direction,
                            infected_at_[i] != kInfinity});
    }
    result_.snapshots.push_back(std::move(snap));
    for (const StreetRuntime& street : streets_) {
      if (street.infected.empty()) continue;
      result_.street_timelines[street.street].push_back(
          {time, cluster_count(street, time)});
    }
  }

  void finalize() {
    for (std::size_t i = 0; i < pop_.size(); ++i) {
      result_.infection_time.emplace(pop_[i].id, infected_at_[i]);
    }
    char buffer[160];
    if (cfg_.stop.kind == StopRule::Kind::kFullContamination &&
        infected_count_ < static_cast<std::int64_t>(pop_.size())) {
      result_.censored = true;
      std::snprintf(buffer, sizeof(buffer),
                    "full contamination not reached by horizon t=%.6g: %lld of %zu infected",
                    horizon_, static_cast<long long>(infected_count_), pop_.size());
      result_.diagnostic = buffer;
    } else if (cfg_.stop.kind == StopRule::Kind::kTargetNode &&
               infected_at_[target_index_] == kInfinity) {
      result_.censored = true;
      std::snprintf(buffer, sizeof(buffer),
                    "target node %lld not reached by horizon t=%.6g",
                    static_cast<long long>(cfg_.stop.target_node), horizon_);
      result_.diagnostic = buffer;
    } else if (cfg_.stop_window && !result_.window_hit_time) {
      result_.diagnostic = "stop window not reached before the run ended";
    }
  }

  const Population& pop_;
  const SimConfig& cfg_;
  double horizon_ = 0.0;
  std::vector<double> infected_at_;
  std::vector<std::int32_t> street_of_;
  std::vector<StreetRuntime> streets_;
  std::vector<std::int32_t> perpendicular_of_[2];  // by carrier orientation
  std::vector<std::int32_t> id_order_;
  std::set<std::int32_t> active_streets_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  std::int64_t infected_count_ = 0;
  std::int32_t source_index_ = -1;
  std::int32_t target_index_ = -1;
  bool stopped_ = false;
  SimResult result_;
};

}  // namespace

SimResult run(const Population& population, const SimConfig& config) {
  Engine engine(population, config);
  return engine.run();
}

double full_broadcast_time(const SimResult& result) {
  if (result.censored) {
    throw std::runtime_error("broadcast run was censored: " + result.diagnostic);
  }
  return result.broadcast_time;
}

std::optional<double> measure_pair_delay(const Population& population,
                                         const SimConfig& config, std::int64_t source,
                                         const InfectionWindow& window) {
  bool street_present = false;
  for (const MobileNode& node : population) {
    if (node.street == window.street) {
      street_present = true;
      break;
    }
  }
  if (!street_present) {
    throw std::invalid_argument("measure_pair_delay: window street holds no nodes");
  }
  SimConfig run_config = config;
  run_config.source = source;
  run_config.stop_window = window;
  return run(population, run_config).window_hit_time;
}

TurnTimeStats empirical_turn_time(const Street& street_i, const Street& street_j,
                                  std::int64_t n_i, std::int64_t n_j, double speed,
                                  std::uint64_t master_seed, std::int64_t replications) {
  if (street_i.orientation == street_j.orientation) {
    throw std::invalid_argument("empirical_turn_time: streets must be perpendicular");
  }
  if (!(speed > 0.0) || n_i < 0 || n_j < 0 || n_i + n_j < 1 || replications < 1) {
    throw std::invalid_argument("empirical_turn_time: invalid arguments");
  }
  // First arrival at the intersection among all n_i + n_j nodes: a carrier
  // arriving hands the packet over; a node of the other street arriving picks
  // it up while momentarily standing on both streets.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t r = 0; r < replications; ++r) {
    Rng rng = Rng::for_replication(master_seed, static_cast<std::uint64_t>(r));
    double first = kInfinity;
    for (int side = 0; side < 2; ++side) {
      const Street& on = side == 0 ? street_i : street_j;
      const Street& other = side == 0 ? street_j : street_i;
      const std::int64_t count = side == 0 ? n_i : n_j;
      const double target = other.coordinate();
      for (std::int64_t k = 0; k < count; ++k) {
        MobileNode node;
        node.id = k;
        node.street = on;
        node.position = rng.uniform01();
        node.direction = rng.direction();
        node.speed = speed;
        first = std::min(first, next_crossing_after(node, target, 0.0));
      }
    }
    const double delta = first - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (first - mean);
  }
  TurnTimeStats stats;
  stats.mean = mean;
  stats.stddev = replications > 1
                     ? std::sqrt(m2 / static_cast<double>(replications - 1))
                     : 0.0;
  stats.replications = replications;
  return stats;
}

std::vector<TeleportReport> teleport_analysis(const SimResult& result) {
  if (result.snapshots.empty()) {
    throw std::invalid_argument("teleport_analysis: the run recorded no snapshots");
  }
  std::vector<TeleportReport> reports;
  reports.reserve(result.street_timelines.size());
  for (const auto& [street, samples] : result.street_timelines) {
    TeleportReport report;
    report.street = street;
    for (const ClusterSample& sample : samples) {
      report.outbreak_count_max = std::max(report.outbreak_count_max, sample.clusters);
      if (sample.clusters >= 2 && !report.first_disjoint_outbreak_time) {
        report.first_disjoint_outbreak_time = sample.time;
      }
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

InflexionEstimate estimate_inflexion(const std::vector<std::pair<double, double>>& means,
                                     double delta, double hop_time) {
  if (means.size() < 2) {
    throw std::invalid_argument("estimate_inflexion: need at least two sweep points");
  }
  if (!(delta > 0.0 && delta < 1.0) || !(hop_time > 0.0)) {
    throw std::invalid_argument("estimate_inflexion: delta must lie in (0,1), hop_time > 0");
  }
  // broadcast_time ~ amplitude * n^(1-delta) in the teleport-dominated regime;
  // each point yields one amplitude sample in log space.
  double mean_log = 0.0;
  std::vector<double> logs;
  logs.reserve(means.size());
  for (const auto& [n, t] : means) {
    if (!(n > 0.0) || !(t > 0.0)) {
      throw std::invalid_argument("estimate_inflexion: sweep points must be positive");
    }
    logs.push_back(std::log(t) - (1.0 - delta) * std::log(n));
    mean_log += logs.back();
  }
  mean_log /= static_cast<double>(logs.size());
  double variance = 0.0;
  for (double v : logs) variance += (v - mean_log) * (v - mean_log);
  variance /= static_cast<double>(logs.size() - 1);
  const double standard_error = std::sqrt(variance / static_cast<double>(logs.size()));

  InflexionEstimate estimate;
  estimate.amplitude = std::exp(mean_log);
  estimate.amplitude_ci_low = std::exp(mean_log - 1.96 * standard_error);
  estimate.amplitude_ci_high = std::exp(mean_log + 1.96 * standard_error);
  // Relayed delivery costs about hop_time * n; the regimes cross where
  // amplitude * n^(1-delta) = hop_time * n.
  const auto crossing = [&](double amplitude) {
    return std::pow(amplitude / hop_time, 1.0 / delta);
  };
  estimate.n_star = crossing(estimate.amplitude);
  estimate.n_star_ci_low = crossing(estimate.amplitude_ci_low);
  estimate.n_star_ci_high = crossing(estimate.amplitude_ci_high);
  return estimate;
}

}  // namespace hyperfractal

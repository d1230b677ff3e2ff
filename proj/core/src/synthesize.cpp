#include "galtraj/synthesize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "galtraj/errors.hpp"
#include "galtraj/rng.hpp"
#include "galtraj/road_analysis.hpp"

namespace galtraj::world {

namespace {

using geom::Vec2;

constexpr double kSpawnClearance = 2.0;
constexpr int kMaxRetries = 100;
constexpr double kAccel = 2.5;        // m/s^2 cruise regulation
constexpr double kBrake = 7.0;        // m/s^2 sudden-stop braking
constexpr double kTurnDecel = 3.0;    // m/s^2 approach slowdown
constexpr double kLateralAccel = 2.5; // limits curve speed

struct AgentPlan {
  Maneuver maneuver = Maneuver::kKeepLane;
  geom::Polyline path;
  std::vector<double> cum;  // cumulative arclength of path
  double s0 = 0.0;
  double cruise = 10.0;
  // Turn slow zone in path arclength; inactive when from > to.
  double slow_from = 1.0, slow_to = 0.0;
  double v_slow = 10.0;
  double brake_time = std::numeric_limits<double>::infinity();  // s after t=0
  double lc_start = std::numeric_limits<double>::infinity();    // s after t=0
  double lc_side = 0.0;
  double lane_width = 3.5;
};

double path_length(const AgentPlan& plan) { return plan.cum.back(); }

Vec2 left_normal(const Vec2& t) { return {-t.y(), t.x()}; }

// Windowed nearest-point projection so progress never snaps across
// path self-proximity (u-turn legs run 3.5 m apart).
double advance_projection(const AgentPlan& plan, double s_prev, const Vec2& pos, double window) {
  const double total = path_length(plan);
  const double s_hi = std::min(total, s_prev + window);
  double best_s = s_prev;
  double best_d = std::numeric_limits<double>::infinity();
  for (double s = s_prev; s <= s_hi + 1e-9; s += 0.25) {
    const Vec2 q = geom::point_at_arclength(plan.path, s).point;
    const double d = (q - pos).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  return best_s;
}

// Smooth 0->1->0 lane-change offset profile (1 s out, 0.8 s hold, 1 s back).
double lane_change_offset(double t_since_start) {
  auto smooth = [](double x) { return x <= 0 ? 0.0 : x >= 1 ? 1.0 : x * x * (3 - 2 * x); };
  if (t_since_start <= 0) return 0.0;
  if (t_since_start < 1.0) return smooth(t_since_start);
  if (t_since_start < 1.8) return 1.0;
  return smooth(1.0 - (t_since_start - 1.8));
}

AgentTrack rollout(const AgentPlan& plan, const Horizons& h) {
  AgentTrack track;
  track.maneuver_label = plan.maneuver;
  const int len = h.track_length();
  track.positions.resize(len);
  track.valid_mask.assign(len, true);

  double s_ref = plan.s0;
  geom::PathPoint start = geom::point_at_arclength(plan.path, plan.s0);
  Vec2 pos = start.point;
  double heading = std::atan2(start.tangent.y(), start.tangent.x());
  double v = (plan.s0 >= plan.slow_from && plan.s0 <= plan.slow_to) ? plan.v_slow : plan.cruise;

  for (int i = 0; i < len; ++i) {
    track.positions[i] = pos;
    if (i + 1 == len) break;
    const double elapsed = (i - h.t_h) * h.dt;  // seconds relative to t=0

    // Longitudinal control.
    double v_tgt = plan.cruise;
    double decel = kTurnDecel;
    const double slow_entry_gap = plan.slow_from - s_ref;
    if (s_ref >= plan.slow_from - 1e-9 && s_ref <= plan.slow_to) {
      v_tgt = plan.v_slow;
    } else if (slow_entry_gap > 0 &&
               slow_entry_gap < (v * v - plan.v_slow * plan.v_slow) / (2 * kTurnDecel) + 2.0) {
      v_tgt = plan.v_slow;  // begin slowing ahead of the turn
    }
    if (elapsed >= plan.brake_time) {
      v_tgt = 0.2;
      decel = kBrake;
    }
    const double dv = std::clamp(v_tgt - v, -decel * h.dt, kAccel * h.dt);
    v += dv;

    // Pure pursuit toward a lookahead point, laterally offset during overtakes.
    const double lookahead = std::max(1.2, 0.5 * v);
    s_ref = advance_projection(plan, s_ref, pos, std::max(3.0 * v * h.dt, lookahead));
    geom::PathPoint tp = geom::point_at_arclength(plan.path, s_ref + lookahead);
    double offset = 0.0;
    if (std::isfinite(plan.lc_start)) {
      offset = plan.lane_width * plan.lc_side * lane_change_offset(elapsed - plan.lc_start);
    }
    const Vec2 target = tp.point + offset * left_normal(tp.tangent);
    const Vec2 to_target = target - pos;
    if (to_target.norm() > 1e-6 && v > 1e-3) {
      const double desired = std::atan2(to_target.y(), to_target.x());
      double diff = desired - heading;
      while (diff > M_PI) diff -= 2 * M_PI;
      while (diff < -M_PI) diff += 2 * M_PI;
      double kappa = 2.0 * std::sin(diff) / lookahead;
      kappa = std::clamp(kappa, -0.8, 0.8);
      heading += v * kappa * h.dt;
    }
    pos += v * h.dt * Vec2{std::cos(heading), std::sin(heading)};
  }
  return track;
}

struct SpawnDraft {
  AgentPlan plan;
  Vec2 spawn_pos;
};

// Assemble approach + connector + exit into one reference path.
AgentPlan make_turn_plan(const MapGraph& map, const TurnRoute& route, Rng& rng,
                         const Horizons& h) {
  AgentPlan plan;
  plan.maneuver = route.kind;
  plan.lane_width = map.lane_width;

  const geom::Polyline& approach = map.lanes[route.approach];
  const geom::Polyline& connector = map.lanes[route.connector];
  const geom::Polyline& exit = map.lanes[route.exit];

  const double s_entry = geom::project_arclength(approach, connector.front());
  const double s_exit = geom::project_arclength(exit, connector.back());

  geom::Polyline path;
  geom::Polyline approach_part;
  const auto cum_a = geom::cumulative_arclength(approach);
  for (std::size_t i = 0; i < approach.size(); ++i)
    if (cum_a[i] < s_entry - 0.25) approach_part.push_back(approach[i]);
  path = approach_part;
  path.insert(path.end(), connector.begin(), connector.end());
  const auto cum_e = geom::cumulative_arclength(exit);
  for (std::size_t i = 0; i < exit.size(); ++i)
    if (cum_e[i] > s_exit + 0.25) path.push_back(exit[i]);
  plan.path = path;
  plan.cum = geom::cumulative_arclength(plan.path);

  const double entry_on_path = geom::polyline_length(approach_part);
  const double conn_len = geom::polyline_length(connector);
  const double angle = std::max(0.2, std::abs([&] {
                         double a = 0.0;
                         for (std::size_t i = 2; i < connector.size(); ++i) {
                           const Vec2 d1 = connector[i - 1] - connector[i - 2];
                           const Vec2 d0 = connector[i] - connector[i - 1];
                           a += std::atan2(d1.x() * d0.y() - d1.y() * d0.x(), d1.dot(d0));
                         }
                         return a;
                       }()));
  const double radius = conn_len / angle;
  plan.v_slow = std::max(1.8, std::sqrt(kLateralAccel * radius));
  plan.cruise = uniform(rng, 7.0, 11.0);
  plan.v_slow = std::min(plan.v_slow, plan.cruise);
  plan.slow_from = std::max(0.0, entry_on_path - 2.0);
  plan.slow_to = entry_on_path + conn_len;

  // Place the spawn so the connector entry lands shortly after t=0.
  const double t_entry = uniform(rng, 0.3, 1.2);
  const double t_pre = h.t_h * h.dt + t_entry;
  const double t_dec = (plan.cruise - plan.v_slow) / kTurnDecel;
  double dist = 0.0;
  if (t_pre <= t_dec) {
    dist = plan.cruise * t_pre;  // still cruising at t=0 (approximation)
  } else {
    dist = plan.cruise * (t_pre - t_dec) + 0.5 * (plan.cruise + plan.v_slow) * t_dec;
  }
  plan.s0 = entry_on_path - dist;
  return plan;
}

AgentPlan make_lane_plan(const MapGraph& map, const RoadInfo& info, Maneuver maneuver, Rng& rng,
                         const Horizons& h) {
  AgentPlan plan;
  plan.maneuver = maneuver;
  plan.lane_width = map.lane_width;

  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(map.lanes.size()); ++i) {
    if (!info.is_through[i]) continue;
    if (maneuver == Maneuver::kOvertake && info.adjacency[i].neighbor < 0) continue;
    candidates.push_back(i);
  }
  if (candidates.empty()) {
    plan.s0 = -1.0;  // marks failure
    return plan;
  }
  const int lane = candidates[uniform_index(rng, candidates.size())];
  plan.path = map.lanes[lane];
  plan.cum = geom::cumulative_arclength(plan.path);
  plan.cruise = uniform(rng, 7.0, 13.0);

  const double total_time = (h.t_h + h.t_f) * h.dt;
  double needed = plan.cruise * total_time + 4.0;
  if (maneuver == Maneuver::kSuddenStop) {
    plan.brake_time = uniform(rng, 0.3, 1.2);
    needed = plan.cruise * (h.t_h * h.dt + plan.brake_time + 1.5) + 4.0;
  } else if (maneuver == Maneuver::kOvertake) {
    plan.lc_start = uniform(rng, 0.2, 0.9);
    plan.lc_side = info.adjacency[lane].side;
    needed = plan.cruise * total_time + 6.0;
  }
  const double total = path_length(plan);
  if (total < needed + 4.0) {
    plan.s0 = -1.0;
    return plan;
  }
  plan.s0 = uniform(rng, 2.0, total - needed - 2.0);
  return plan;
}

Maneuver sample_maneuver(const ManeuverMix& mix, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int i = 0; i < kManeuverCount; ++i) {
    acc += mix.p[i];
    if (u < acc) return static_cast<Maneuver>(i);
  }
  return Maneuver::kKeepLane;
}

}  // namespace

double ManeuverMix::tail_mass() const {
  double m = 0.0;
  for (int i = 0; i < kManeuverCount; ++i)
    if (is_tail_maneuver(static_cast<Maneuver>(i))) m += p[i];
  return m;
}

void ManeuverMix::validate() const {
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw ConfigError("maneuver_mix: negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("maneuver_mix: probabilities must sum to 1");
}

Scenario synthesize_scenario(const MapGraph& map, const ManeuverMix& mix, int n_agents,
                             std::uint64_t seed, const Horizons& horizons) {
  mix.validate();
  if (n_agents < 2 || n_agents > kDefaultMaxAgents)
    throw ConfigError("synthesize_scenario: n_agents outside [2, " +
                      std::to_string(kDefaultMaxAgents) + "]");

  const RoadInfo info = analyze_map(map);
  Rng rng = make_rng(seed, 0x5CE11A);

  Scenario scenario;
  scenario.map = map;
  scenario.horizons = horizons;

  std::vector<Vec2> spawn_positions;
  for (int agent = 0; agent < n_agents; ++agent) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
      const Maneuver m = sample_maneuver(mix, rng);
      if (!info.feasible_for(m)) continue;

      AgentPlan plan;
      if (m == Maneuver::kGentleTurn || m == Maneuver::kHardTurn || m == Maneuver::kUTurn) {
        std::vector<const TurnRoute*> routes;
        for (const auto& r : info.turn_routes)
          if (r.kind == m) routes.push_back(&r);
        const TurnRoute* route = routes[uniform_index(rng, routes.size())];
        plan = make_turn_plan(map, *route, rng, horizons);
      } else {
        plan = make_lane_plan(map, info, m, rng, horizons);
      }
      if (plan.s0 < 2.0) continue;

      const Vec2 spawn = geom::point_at_arclength(plan.path, plan.s0).point;
      bool clear = true;
      for (const Vec2& other : spawn_positions)
        if ((spawn - other).norm() < kSpawnClearance) clear = false;
      if (!clear) continue;

      AgentTrack track = rollout(plan, horizons);
      bool contained = true;
      for (const Vec2& p : track.positions)
        if (!geom::point_in_polygon(map.drivable_area, p)) contained = false;
      if (!contained) continue;

      track.agent_id = agent;
      scenario.agents.push_back(std::move(track));
      spawn_positions.push_back(spawn);
      placed = true;
    }
    if (!placed)
      throw DataError("synthesize_scenario: no feasible spawn for agent " +
                      std::to_string(agent) + " (seed " + std::to_string(seed) + ")");
  }
  return scenario;
}

void DatasetConfig::validate() const {
  if (count < 0) throw ConfigError("dataset: negative count");
  maneuver_mix.validate();
  if (maneuver_mix.tail_mass() > 0.1 + 1e-12)
    throw ConfigError("dataset: tail maneuver mass exceeds 0.1");
  double topo_sum = 0.0;
  for (double v : topology_mix) {
    if (v < 0.0) throw ConfigError("dataset: negative topology probability");
    topo_sum += v;
  }
  if (std::abs(topo_sum - 1.0) > 1e-9) throw ConfigError("dataset: topology_mix must sum to 1");
  if (agents_min < 2 || agents_max > kDefaultMaxAgents || agents_min > agents_max)
    throw ConfigError("dataset: agent count bounds invalid");
}

std::vector<Scenario> synthesize_dataset(const DatasetConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<Scenario> out;
  out.reserve(config.count);

  // Maps are reused across scenarios sharing (topology, map seed bucket).
  Rng rng = make_rng(seed, 0xDA7A);
  for (int i = 0; i < config.count; ++i) {
    const double u = uniform01(rng);
    double acc = 0.0;
    Topology topo = Topology::kStraight;
    for (int t = 0; t < kTopologyCount; ++t) {
      acc += config.topology_mix[t];
      if (u < acc) {
        topo = static_cast<Topology>(t);
        break;
      }
    }
    const std::uint64_t map_seed = mix_seed(seed, 0x300 + static_cast<std::uint64_t>(i) % 16);
    const int n_agents =
        config.agents_min + static_cast<int>(uniform_index(
                                rng, static_cast<std::size_t>(config.agents_max - config.agents_min + 1)));
    const MapGraph map = build_map(map_seed, topo);
    try {
      Scenario s = synthesize_scenario(map, config.maneuver_mix, n_agents,
                                       mix_seed(seed, 0x1000 + static_cast<std::uint64_t>(i)),
                                       config.horizons);
      s.scenario_id = i;
      out.push_back(std::move(s));
    } catch (const DataError& e) {
      throw DataError("synthesize_dataset: scenario " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace galtraj::world

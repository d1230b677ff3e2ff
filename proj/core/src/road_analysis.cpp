#include "galtraj/road_analysis.hpp"

#include <cmath>
#include <limits>

namespace galtraj::world {

namespace {

using geom::Vec2;

double wrap_angle(double a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a < -M_PI) a += 2 * M_PI;
  return a;
}

double heading_of(const Vec2& t) { return std::atan2(t.y(), t.x()); }

// Total signed heading change along a polyline.
double turn_angle(const geom::Polyline& line) {
  double total = 0.0;
  Vec2 prev_dir{0.0, 0.0};
  bool have_prev = false;
  for (std::size_t i = 1; i < line.size(); ++i) {
    Vec2 d = line[i] - line[i - 1];
    const double n = d.norm();
    if (n <= 1e-9) continue;
    d /= n;
    if (have_prev) total += wrap_angle(heading_of(d) - heading_of(prev_dir));
    prev_dir = d;
    have_prev = true;
  }
  return total;
}

Maneuver classify_connector(const geom::Polyline& line) {
  const double angle = std::abs(turn_angle(line));
  if (angle >= 150.0 * M_PI / 180.0) return Maneuver::kUTurn;
  const double radius = geom::polyline_length(line) / std::max(angle, 1e-6);
  return radius >= 9.0 ? Maneuver::kGentleTurn : Maneuver::kHardTurn;
}

}  // namespace

RoadInfo analyze_map(const MapGraph& map) {
  RoadInfo info;
  const int n = static_cast<int>(map.lanes.size());
  info.is_connector.assign(n, false);
  info.is_through.assign(n, false);
  info.adjacency.assign(n, {});

  // A connector both succeeds some lane and precedes another.
  std::vector<bool> has_pred(n, false), has_succ(n, false);
  for (const auto& [a, b] : map.connectivity) {
    has_succ[a] = true;
    has_pred[b] = true;
  }
  for (int i = 0; i < n; ++i) info.is_connector[i] = has_pred[i] && has_succ[i];

  double max_len = 0.0;
  std::vector<double> lengths(n);
  for (int i = 0; i < n; ++i) {
    lengths[i] = geom::polyline_length(map.lanes[i]);
    if (!info.is_connector[i]) max_len = std::max(max_len, lengths[i]);
  }
  for (int i = 0; i < n; ++i)
    info.is_through[i] = !info.is_connector[i] && lengths[i] >= 0.6 * max_len;

  // Turn routes: (a -> c) and (c -> b) with c a connector.
  for (const auto& [a, c1] : map.connectivity) {
    if (!info.is_connector[c1] || info.is_connector[a]) continue;
    for (const auto& [c2, b] : map.connectivity) {
      if (c2 != c1 || info.is_connector[b]) continue;
      TurnRoute route;
      route.approach = a;
      route.connector = c1;
      route.exit = b;
      route.kind = classify_connector(map.lanes[c1]);
      info.turn_routes.push_back(route);
    }
  }

  // Same-direction parallel neighbors among through lanes.
  for (int i = 0; i < n; ++i) {
    if (!info.is_through[i]) continue;
    const double mid_s = lengths[i] / 2;
    const geom::PathPoint mid = geom::point_at_arclength(map.lanes[i], mid_s);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == i || !info.is_through[k]) continue;
      const double s_k = geom::project_arclength(map.lanes[k], mid.point);
      const geom::PathPoint q = geom::point_at_arclength(map.lanes[k], s_k);
      const double dist = (q.point - mid.point).norm();
      if (dist < 0.5 * map.lane_width || dist > 1.5 * map.lane_width) continue;
      if (mid.tangent.dot(q.tangent) < 0.94) continue;  // ~20 degrees
      if (dist < best) {
        best = dist;
        info.adjacency[i].neighbor = k;
        const Vec2 to_neighbor = q.point - mid.point;
        const double cross = mid.tangent.x() * to_neighbor.y() - mid.tangent.y() * to_neighbor.x();
        info.adjacency[i].side = cross >= 0.0 ? 1 : -1;
      }
    }
  }

  auto set_feasible = [&info](Maneuver m, bool v) { info.feasible[static_cast<int>(m)] = v; };
  bool any_through = false, any_adjacent = false;
  for (int i = 0; i < n; ++i) {
    any_through |= info.is_through[i];
    any_adjacent |= info.adjacency[i].neighbor >= 0;
  }
  bool gentle = false, hard = false, uturn = false;
  for (const auto& r : info.turn_routes) {
    gentle |= r.kind == Maneuver::kGentleTurn;
    hard |= r.kind == Maneuver::kHardTurn;
    uturn |= r.kind == Maneuver::kUTurn;
  }
  set_feasible(Maneuver::kKeepLane, any_through);
  set_feasible(Maneuver::kSuddenStop, any_through);
  set_feasible(Maneuver::kOvertake, any_adjacent);
  set_feasible(Maneuver::kGentleTurn, gentle);
  set_feasible(Maneuver::kHardTurn, hard);
  set_feasible(Maneuver::kUTurn, uturn);
  return info;
}

LaneFeature nearest_lane_feature(const MapGraph& map, const Vec2& query) {
  LaneFeature best;
  double best_sq = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(map.lanes.size()); ++i) {
    const double d_sq = geom::polyline_distance_sq(map.lanes[i], query);
    if (d_sq < best_sq) {
      best_sq = d_sq;
      best.lane = i;
    }
  }
  if (best.lane >= 0) {
    const double s = geom::project_arclength(map.lanes[best.lane], query);
    const geom::PathPoint p = geom::point_at_arclength(map.lanes[best.lane], s);
    best.point = p.point;
    best.tangent = p.tangent;
  }
  return best;
}

}  // namespace galtraj::world

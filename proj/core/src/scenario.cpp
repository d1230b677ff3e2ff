#include "galtraj/scenario.hpp"

#include <cmath>

#include "galtraj/errors.hpp"

namespace galtraj::world {

const char* maneuver_name(Maneuver m) {
  switch (m) {
    case Maneuver::kKeepLane: return "keep-lane";
    case Maneuver::kGentleTurn: return "gentle-turn";
    case Maneuver::kHardTurn: return "hard-turn";
    case Maneuver::kUTurn: return "u-turn";
    case Maneuver::kSuddenStop: return "sudden-stop";
    case Maneuver::kOvertake: return "overtake";
  }
  return "unknown";
}

std::optional<Maneuver> maneuver_from_name(const std::string& name) {
  for (int i = 0; i < kManeuverCount; ++i) {
    const Maneuver m = static_cast<Maneuver>(i);
    if (name == maneuver_name(m)) return m;
  }
  return std::nullopt;
}

bool is_tail_maneuver(Maneuver m) {
  return m == Maneuver::kUTurn || m == Maneuver::kSuddenStop || m == Maneuver::kOvertake;
}

void validate_map(const MapGraph& map) {
  if (map.lane_width <= 0.0) throw DataError("map: lane_width must be positive");
  if (map.lanes.empty()) throw DataError("map: no lanes");
  if (!geom::polygon_is_simple(map.drivable_area))
    throw DataError("map: drivable_area is not a simple polygon");
  for (std::size_t i = 0; i < map.lanes.size(); ++i) {
    const auto& lane = map.lanes[i];
    if (lane.size() < 2)
      throw DataError("map: lane " + std::to_string(i) + " has fewer than 2 points");
    if (geom::polyline_length(lane) <= 0.0)
      throw DataError("map: lane " + std::to_string(i) + " has zero arc length");
    for (const auto& p : lane) {
      if (!geom::point_in_polygon(map.drivable_area, p))
        throw DataError("map: lane " + std::to_string(i) + " leaves drivable_area");
    }
  }
  const int n = static_cast<int>(map.lanes.size());
  for (const auto& [a, b] : map.connectivity) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw DataError("map: connectivity references lane out of range");
  }
}

void validate_track(const AgentTrack& track, const Horizons& h, double v_max) {
  const std::size_t want = static_cast<std::size_t>(h.track_length());
  if (track.agent_id < 0) throw DataError("track: negative agent_id");
  if (track.positions.size() != want || track.valid_mask.size() != want)
    throw DataError("track: agent " + std::to_string(track.agent_id) +
                    " length mismatch with horizons");
  for (std::size_t i = 0; i + 1 < want; ++i) {
    if (!track.valid_mask[i] || !track.valid_mask[i + 1]) continue;
    const double speed = (track.positions[i + 1] - track.positions[i]).norm() / h.dt;
    if (!(speed <= v_max))
      throw DataError("track: agent " + std::to_string(track.agent_id) +
                      " exceeds speed bound at step " + std::to_string(i));
  }
  for (std::size_t i = 0; i < want; ++i) {
    if (track.valid_mask[i] &&
        (!std::isfinite(track.positions[i].x()) || !std::isfinite(track.positions[i].y())))
      throw DataError("track: non-finite position");
  }
}

void validate_scenario(const Scenario& s, int n_max, double v_max) {
  if (s.scenario_id < 0) throw DataError("scenario: negative id");
  const int n = static_cast<int>(s.agents.size());
  if (n < 2 || n > n_max)
    throw DataError("scenario " + std::to_string(s.scenario_id) + ": agent count " +
                    std::to_string(n) + " outside [2, " + std::to_string(n_max) + "]");
  validate_map(s.map);
  for (const auto& t : s.agents) validate_track(t, s.horizons, v_max);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (s.agents[i].agent_id == s.agents[j].agent_id)
        throw DataError("scenario: duplicate agent_id");
}

}  // namespace galtraj::world

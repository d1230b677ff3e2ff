#ifndef GALTRAJ_ROAD_ANALYSIS_HPP_
#define GALTRAJ_ROAD_ANALYSIS_HPP_

#include <array>
#include <vector>

#include "galtraj/scenario.hpp"

namespace galtraj::world {

// A drivable turn: approach lane -> connector lane -> exit lane.
struct TurnRoute {
  int approach = -1;
  int connector = -1;
  int exit = -1;
  Maneuver kind = Maneuver::kGentleTurn;  // gentle-turn, hard-turn or u-turn
};

struct LaneAdjacency {
  int neighbor = -1;  // same-direction parallel lane, -1 if none
  int side = 0;       // +1 neighbor on the left, -1 on the right
};

struct RoadInfo {
  std::vector<bool> is_connector;
  std::vector<bool> is_through;  // long lanes suitable for lane-keeping spawns
  std::vector<TurnRoute> turn_routes;
  std::vector<LaneAdjacency> adjacency;  // indexed by lane

  std::array<bool, kManeuverCount> feasible{};
  bool feasible_for(Maneuver m) const { return feasible[static_cast<int>(m)]; }
};

RoadInfo analyze_map(const MapGraph& map);

// Nearest lane centerline point to a world query, with its unit tangent.
struct LaneFeature {
  int lane = -1;
  geom::Vec2 point{0.0, 0.0};
  geom::Vec2 tangent{1.0, 0.0};
};

LaneFeature nearest_lane_feature(const MapGraph& map, const geom::Vec2& query);

}  // namespace galtraj::world

#endif  // GALTRAJ_ROAD_ANALYSIS_HPP_

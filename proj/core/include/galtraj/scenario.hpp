#ifndef GALTRAJ_SCENARIO_HPP_
#define GALTRAJ_SCENARIO_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "galtraj/geometry.hpp"

namespace galtraj::world {

enum class Maneuver {
  kKeepLane,
  kGentleTurn,
  kHardTurn,
  kUTurn,
  kSuddenStop,
  kOvertake,
};

inline constexpr int kManeuverCount = 6;

const char* maneuver_name(Maneuver m);
std::optional<Maneuver> maneuver_from_name(const std::string& name);

// Tail maneuvers are the rare, safety-critical ones the synthesizer
// underrepresents; the rest are head maneuvers.
bool is_tail_maneuver(Maneuver m);

struct Horizons {
  int t_h = 10;       // observed steps before t=0
  int t_f = 30;       // future steps after t=0
  double dt = 0.1;    // seconds per step

  int track_length() const { return t_h + t_f + 1; }
  bool operator==(const Horizons& o) const {
    return t_h == o.t_h && t_f == o.t_f && dt == o.dt;
  }
};

struct MapGraph {
  std::vector<geom::Polyline> lanes;
  double lane_width = 3.5;
  geom::Polygon drivable_area;
  std::vector<std::pair<int, int>> connectivity;  // (lane, successor lane)
};

struct AgentTrack {
  int agent_id = 0;
  std::vector<geom::Vec2> positions;  // index 0 <-> t = -t_h
  std::vector<bool> valid_mask;
  Maneuver maneuver_label = Maneuver::kKeepLane;

  // Index into positions for time step t in [-t_h, t_f].
  static int index_of(const Horizons& h, int t) { return t + h.t_h; }
};

struct Scenario {
  std::int64_t scenario_id = 0;
  MapGraph map;
  std::vector<AgentTrack> agents;
  Horizons horizons;
};

inline constexpr double kDefaultMaxSpeed = 25.0;  // m/s
inline constexpr int kDefaultMaxAgents = 8;

// Throws DataError with a description of the first violated invariant.
void validate_map(const MapGraph& map);
void validate_track(const AgentTrack& track, const Horizons& h, double v_max = kDefaultMaxSpeed);
void validate_scenario(const Scenario& s, int n_max = kDefaultMaxAgents,
                       double v_max = kDefaultMaxSpeed);

}  // namespace galtraj::world

#endif  // GALTRAJ_SCENARIO_HPP_

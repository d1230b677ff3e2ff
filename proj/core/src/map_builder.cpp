#include "galtraj/map_builder.hpp"

#include <cmath>

#include "galtraj/errors.hpp"
#include "galtraj/rng.hpp"

namespace galtraj::world {

namespace {

constexpr double kLaneWidth = 3.5;
constexpr double kPi = 3.14159265358979323846;

using geom::Polyline;
using geom::Vec2;

Polyline straight_lane(const Vec2& a, const Vec2& b) {
  return geom::resample_polyline({a, b}, 2.0);
}

Polyline arc_lane(const Vec2& center, double radius, double phi0, double phi1, double spacing = 1.0) {
  const double span = phi1 - phi0;
  const int n = std::max(6, static_cast<int>(std::ceil(std::abs(span) * radius / spacing)));
  Polyline out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double phi = phi0 + span * i / n;
    out.emplace_back(center.x() + radius * std::cos(phi), center.y() + radius * std::sin(phi));
  }
  return out;
}

MapGraph build_straight(Rng& rng) {
  MapGraph map;
  map.lane_width = kLaneWidth;
  const double half_len = uniform(rng, 55.0, 75.0);
  map.lanes.push_back(straight_lane({-half_len, -kLaneWidth / 2}, {half_len, -kLaneWidth / 2}));
  map.lanes.push_back(straight_lane({-half_len, kLaneWidth / 2}, {half_len, kLaneWidth / 2}));
  const double margin = kLaneWidth + 1.0;
  map.drivable_area = {{-half_len - 1.0, -margin},
                       {half_len + 1.0, -margin},
                       {half_len + 1.0, margin},
                       {-half_len - 1.0, margin}};
  return map;
}

MapGraph build_curve(Rng& rng) {
  MapGraph map;
  map.lane_width = kLaneWidth;
  const double r_inner = uniform(rng, 28.0, 42.0);
  const Vec2 center{0.0, 0.0};
  // Quarter bend, both lanes running counterclockwise.
  map.lanes.push_back(arc_lane(center, r_inner, -kPi / 2, 0.0, 2.0));
  map.lanes.push_back(arc_lane(center, r_inner + kLaneWidth, -kPi / 2, 0.0, 2.0));
  const double pad = 3.0 * kPi / 180.0;
  const double r_lo = r_inner - kLaneWidth / 2 - 1.0;
  const double r_hi = r_inner + 1.5 * kLaneWidth + 1.0;
  geom::Polygon area;
  const int n = 40;
  for (int i = 0; i <= n; ++i) {
    const double phi = (-kPi / 2 - pad) + (kPi / 2 + 2 * pad) * i / n;
    area.emplace_back(r_hi * std::cos(phi), r_hi * std::sin(phi));
  }
  for (int i = n; i >= 0; --i) {
    const double phi = (-kPi / 2 - pad) + (kPi / 2 + 2 * pad) * i / n;
    area.emplace_back(r_lo * std::cos(phi), r_lo * std::sin(phi));
  }
  map.drivable_area = area;
  return map;
}

// Shared junction geometry. The east-west main road has two lanes per
// direction (eastbound south of the centerline), minor arms one per
// direction at x = +-1.75. Turn connectors are tangent circular arcs.
constexpr double kInner = kLaneWidth / 2;          // 1.75
constexpr double kOuter = 1.5 * kLaneWidth;        // 5.25
constexpr double kMainEdge = 2.0 * kLaneWidth;     // 7.0
constexpr double kMainCorridor = kMainEdge + 1.25; // 8.25
constexpr double kArmCorridor = kLaneWidth + 1.25; // 4.75
constexpr double kGentleRadius = 12.0;
constexpr double kHardRadius = 6.0;

struct JunctionLanes {
  std::vector<Polyline> lanes;
  std::vector<std::pair<int, int>> connectivity;
};

int add_lane(JunctionLanes& j, Polyline lane) {
  j.lanes.push_back(std::move(lane));
  return static_cast<int>(j.lanes.size()) - 1;
}

void add_connector(JunctionLanes& j, int from, int to, Polyline arc) {
  const int c = add_lane(j, std::move(arc));
  j.connectivity.emplace_back(from, c);
  j.connectivity.emplace_back(c, to);
}

MapGraph build_t_intersection(Rng& rng) {
  MapGraph map;
  map.lane_width = kLaneWidth;
  const double half_len = uniform(rng, 55.0, 70.0);
  const double stem_len = uniform(rng, 0.30, 0.38) * 2.0 * half_len;

  JunctionLanes j;
  const int eb_outer = add_lane(j, straight_lane({-half_len, -kOuter}, {half_len, -kOuter}));
  const int eb_inner = add_lane(j, straight_lane({-half_len, -kInner}, {half_len, -kInner}));
  const int wb_inner = add_lane(j, straight_lane({half_len, kInner}, {-half_len, kInner}));
  const int wb_outer = add_lane(j, straight_lane({half_len, kOuter}, {-half_len, kOuter}));
  const int sb_arm = add_lane(j, straight_lane({-kInner, stem_len + kMainEdge}, {-kInner, kMainEdge}));
  const int nb_arm = add_lane(j, straight_lane({kInner, kMainEdge}, {kInner, stem_len + kMainEdge}));
  (void)eb_outer;
  (void)wb_outer;

  const double rg = kGentleRadius;
  const double rh = kHardRadius;
  // Eastbound -> north arm, gentle left.
  add_connector(j, eb_inner, nb_arm,
                arc_lane({kInner - rg, -kInner + rg}, rg, -kPi / 2, 0.0));
  // South arm -> eastbound, gentle left.
  add_connector(j, sb_arm, eb_inner,
                arc_lane({-kInner + rg, -kInner + rg}, rg, kPi, 1.5 * kPi));
  // South arm -> westbound, hard right (clockwise).
  add_connector(j, sb_arm, wb_inner,
                arc_lane({-kInner - rh, kInner + rh}, rh, 0.0, -kPi / 2));
  // Westbound -> north arm, hard right (clockwise).
  add_connector(j, wb_inner, nb_arm,
                arc_lane({kInner + rh, kInner + rh}, rh, -kPi / 2, -kPi));
  // U-turns across the junction center.
  add_connector(j, eb_inner, wb_inner, arc_lane({0.0, 0.0}, kInner, -kPi / 2, kPi / 2));
  add_connector(j, wb_inner, eb_inner, arc_lane({0.0, 0.0}, kInner, kPi / 2, 1.5 * kPi));

  map.lanes = std::move(j.lanes);
  map.connectivity = std::move(j.connectivity);
  const double top = stem_len + kMainEdge + 1.0;
  map.drivable_area = {{-half_len - 1.0, -kMainCorridor},
                       {half_len + 1.0, -kMainCorridor},
                       {half_len + 1.0, kMainCorridor},
                       {kArmCorridor, kMainCorridor},
                       {kArmCorridor, top},
                       {-kArmCorridor, top},
                       {-kArmCorridor, kMainCorridor},
                       {-half_len - 1.0, kMainCorridor}};
  return map;
}

MapGraph build_four_way(Rng& rng) {
  MapGraph map;
  map.lane_width = kLaneWidth;
  const double half_len = uniform(rng, 55.0, 70.0);
  const double half_minor = uniform(rng, 0.42, 0.48) * 2.0 * half_len;

  JunctionLanes j;
  const int eb_outer = add_lane(j, straight_lane({-half_len, -kOuter}, {half_len, -kOuter}));
  const int eb_inner = add_lane(j, straight_lane({-half_len, -kInner}, {half_len, -kInner}));
  const int wb_inner = add_lane(j, straight_lane({half_len, kInner}, {-half_len, kInner}));
  const int wb_outer = add_lane(j, straight_lane({half_len, kOuter}, {-half_len, kOuter}));
  const int nb_minor = add_lane(j, straight_lane({kInner, -half_minor}, {kInner, half_minor}));
  const int sb_minor = add_lane(j, straight_lane({-kInner, half_minor}, {-kInner, -half_minor}));
  (void)eb_outer;
  (void)wb_outer;

  const double rg = kGentleRadius;
  const double rh = kHardRadius;
  add_connector(j, eb_inner, nb_minor,
                arc_lane({kInner - rg, -kInner + rg}, rg, -kPi / 2, 0.0));
  add_connector(j, sb_minor, eb_inner,
                arc_lane({-kInner + rg, -kInner + rg}, rg, kPi, 1.5 * kPi));
  add_connector(j, nb_minor, wb_inner,
                arc_lane({kInner - rg, kInner - rg}, rg, 0.0, kPi / 2));
  add_connector(j, sb_minor, wb_inner,
                arc_lane({-kInner - rh, kInner + rh}, rh, 0.0, -kPi / 2));
  add_connector(j, wb_inner, nb_minor,
                arc_lane({kInner + rh, kInner + rh}, rh, -kPi / 2, -kPi));
  add_connector(j, eb_inner, sb_minor,
                arc_lane({-kInner - rh, -kInner - rh}, rh, kPi / 2, 0.0));
  add_connector(j, nb_minor, eb_inner,
                arc_lane({kInner + rh, -kInner - rh}, rh, kPi, kPi / 2));
  add_connector(j, eb_inner, wb_inner, arc_lane({0.0, 0.0}, kInner, -kPi / 2, kPi / 2));
  add_connector(j, wb_inner, eb_inner, arc_lane({0.0, 0.0}, kInner, kPi / 2, 1.5 * kPi));

  map.lanes = std::move(j.lanes);
  map.connectivity = std::move(j.connectivity);
  const double top = half_minor + 1.0;
  map.drivable_area = {{-half_len - 1.0, -kMainCorridor},
                       {-kArmCorridor, -kMainCorridor},
                       {-kArmCorridor, -top},
                       {kArmCorridor, -top},
                       {kArmCorridor, -kMainCorridor},
                       {half_len + 1.0, -kMainCorridor},
                       {half_len + 1.0, kMainCorridor},
                       {kArmCorridor, kMainCorridor},
                       {kArmCorridor, top},
                       {-kArmCorridor, top},
                       {-kArmCorridor, kMainCorridor},
                       {-half_len - 1.0, kMainCorridor}};
  return map;
}

}  // namespace

const char* topology_name(Topology t) {
  switch (t) {
    case Topology::kStraight: return "straight";
    case Topology::kCurve: return "curve";
    case Topology::kTIntersection: return "t-intersection";
    case Topology::kFourWay: return "four-way";
  }
  return "unknown";
}

std::optional<Topology> topology_from_name(const std::string& name) {
  for (int i = 0; i < kTopologyCount; ++i) {
    const Topology t = static_cast<Topology>(i);
    if (name == topology_name(t)) return t;
  }
  return std::nullopt;
}

MapGraph build_map(std::uint64_t seed, Topology topology) {
  Rng rng = make_rng(seed, 0xA11CE);
  MapGraph map;
  switch (topology) {
    case Topology::kStraight: map = build_straight(rng); break;
    case Topology::kCurve: map = build_curve(rng); break;
    case Topology::kTIntersection: map = build_t_intersection(rng); break;
    case Topology::kFourWay: map = build_four_way(rng); break;
    default: throw ConfigError("build_map: unknown topology");
  }
  validate_map(map);
  return map;
}

}  // namespace galtraj::world

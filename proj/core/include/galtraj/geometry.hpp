#ifndef GALTRAJ_GEOMETRY_HPP_
#define GALTRAJ_GEOMETRY_HPP_

#include <Eigen/Core>
#include <vector>

namespace galtraj::geom {

using Vec2 = Eigen::Vector2d;
using Polyline = std::vector<Vec2>;
// Simple polygon, vertices in order, implicitly closed (last connects to first).
using Polygon = std::vector<Vec2>;

struct Aabb {
  Vec2 lo{0.0, 0.0};
  Vec2 hi{0.0, 0.0};
  bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

Aabb bounding_box(const std::vector<Vec2>& points);

double polyline_length(const Polyline& line);

// Cumulative arc lengths, size == line.size(), first entry 0.
std::vector<double> cumulative_arclength(const Polyline& line);

struct PathPoint {
  Vec2 point{0.0, 0.0};
  Vec2 tangent{1.0, 0.0};  // unit
};

// Point and unit tangent at arc length s (clamped to [0, length]).
PathPoint point_at_arclength(const Polyline& line, double s);

// Arc length of the closest point on the polyline to p.
double project_arclength(const Polyline& line, const Vec2& p);

// Squared distance from p to the closest point of the polyline.
double polyline_distance_sq(const Polyline& line, const Vec2& p);

// Re-tessellate with roughly uniform spacing, endpoints preserved.
Polyline resample_polyline(const Polyline& line, double spacing);

bool point_in_polygon(const Polygon& poly, const Vec2& p);

// True when no two non-adjacent edges intersect and no edge degenerates.
bool polygon_is_simple(const Polygon& poly);

struct BoundaryHit {
  double distance = 0.0;
  Vec2 nearest{0.0, 0.0};
};

// Distance from p to the polygon boundary with the closest boundary point.
BoundaryHit project_to_boundary(const Polygon& poly, const Vec2& p);

// Distance outside the polygon: 0 inside/on the boundary, else boundary
// distance; `nearest` is the closest boundary point (valid when d_out > 0).
struct OutsideHit {
  double d_out = 0.0;
  Vec2 nearest{0.0, 0.0};
};

OutsideHit distance_outside(const Polygon& poly, const Vec2& p);

// Closest point on segment [a,b] to p.
Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p);

}  // namespace galtraj::geom

#endif  // GALTRAJ_GEOMETRY_HPP_

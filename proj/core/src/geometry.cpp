#include "galtraj/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace galtraj::geom {

Aabb bounding_box(const std::vector<Vec2>& points) {
  Aabb box;
  if (points.empty()) return box;
  box.lo = box.hi = points.front();
  for (const Vec2& p : points) {
    box.lo = box.lo.cwiseMin(p);
    box.hi = box.hi.cwiseMax(p);
  }
  return box;
}

double polyline_length(const Polyline& line) {
  double len = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) len += (line[i] - line[i - 1]).norm();
  return len;
}

std::vector<double> cumulative_arclength(const Polyline& line) {
  std::vector<double> cum(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i)
    cum[i] = cum[i - 1] + (line[i] - line[i - 1]).norm();
  return cum;
}

PathPoint point_at_arclength(const Polyline& line, double s) {
  PathPoint out;
  if (line.empty()) return out;
  if (line.size() == 1) {
    out.point = line[0];
    return out;
  }
  const std::vector<double> cum = cumulative_arclength(line);
  const double total = cum.back();
  s = std::clamp(s, 0.0, total);
  auto it = std::upper_bound(cum.begin(), cum.end(), s);
  std::size_t hi = std::min<std::size_t>(line.size() - 1, static_cast<std::size_t>(it - cum.begin()));
  if (hi == 0) hi = 1;
  const std::size_t lo = hi - 1;
  const double seg = cum[hi] - cum[lo];
  const double t = seg > 0.0 ? (s - cum[lo]) / seg : 0.0;
  out.point = line[lo] + t * (line[hi] - line[lo]);
  Vec2 dir = line[hi] - line[lo];
  const double n = dir.norm();
  out.tangent = n > 0.0 ? Vec2(dir / n) : Vec2(1.0, 0.0);
  return out;
}

Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len_sq = ab.squaredNorm();
  if (len_sq <= 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
  return a + t * ab;
}

double project_arclength(const Polyline& line, const Vec2& p) {
  if (line.size() < 2) return 0.0;
  double best_sq = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  double s_base = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 q = closest_point_on_segment(line[i - 1], line[i], p);
    const double d_sq = (q - p).squaredNorm();
    if (d_sq < best_sq) {
      best_sq = d_sq;
      best_s = s_base + (q - line[i - 1]).norm();
    }
    s_base += (line[i] - line[i - 1]).norm();
  }
  return best_s;
}

double polyline_distance_sq(const Polyline& line, const Vec2& p) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return (line[0] - p).squaredNorm();
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 q = closest_point_on_segment(line[i - 1], line[i], p);
    best_sq = std::min(best_sq, (q - p).squaredNorm());
  }
  return best_sq;
}

Polyline resample_polyline(const Polyline& line, double spacing) {
  if (line.size() < 2 || spacing <= 0.0) return line;
  const double total = polyline_length(line);
  const int n = std::max(1, static_cast<int>(std::ceil(total / spacing)));
  Polyline out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    out.push_back(point_at_arclength(line, total * i / n).point);
  }
  return out;
}

bool point_in_polygon(const Polygon& poly, const Vec2& p) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  // Even-odd crossing rule; half-open edge treatment keeps vertices counted once.
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[j];
    const Vec2& b = poly[i];
    const bool crosses = (b.y() > p.y()) != (a.y() > p.y());
    if (crosses) {
      const double x_at = b.x() + (p.y() - b.y()) * (a.x() - b.x()) / (a.y() - b.y());
      if (p.x() < x_at) inside = !inside;
    }
  }
  return inside;
}

namespace {

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  if (v > 1e-12) return 1;
  if (v < -1e-12) return -1;
  return 0;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return p.x() <= std::max(a.x(), b.x()) + 1e-12 && p.x() >= std::min(a.x(), b.x()) - 1e-12 &&
         p.y() <= std::max(a.y(), b.y()) + 1e-12 && p.y() >= std::min(a.y(), b.y()) - 1e-12;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

bool polygon_is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if ((b - a).squaredNorm() <= 0.0) return false;  // degenerate edge
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip the edge itself and the two adjacent edges (they share a vertex).
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      const Vec2& c = poly[j];
      const Vec2& d = poly[(j + 1) % n];
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

BoundaryHit project_to_boundary(const Polygon& poly, const Vec2& p) {
  BoundaryHit hit;
  hit.distance = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 q = closest_point_on_segment(poly[i], poly[(i + 1) % n], p);
    const double d = (q - p).norm();
    if (d < hit.distance) {
      hit.distance = d;
      hit.nearest = q;
    }
  }
  return hit;
}

OutsideHit distance_outside(const Polygon& poly, const Vec2& p) {
  OutsideHit out;
  if (point_in_polygon(poly, p)) return out;
  const BoundaryHit hit = project_to_boundary(poly, p);
  out.d_out = hit.distance;
  out.nearest = hit.nearest;
  return out;
}

}  // namespace galtraj::geom

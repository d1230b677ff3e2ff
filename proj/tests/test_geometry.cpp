#include <doctest.h>

#include <cmath>

#include "galtraj/geometry.hpp"
#include "galtraj/rng.hpp"

using namespace galtraj;
using geom::Vec2;

namespace {

geom::Polygon unit_square(double half = 1.0) {
  return {{-half, -half}, {half, -half}, {half, half}, {-half, half}};
}

}  // namespace

TEST_CASE("point_in_polygon on a square") {
  const geom::Polygon sq = unit_square(2.0);
  CHECK(geom::point_in_polygon(sq, {0.0, 0.0}));
  CHECK(geom::point_in_polygon(sq, {1.9, -1.9}));
  CHECK_FALSE(geom::point_in_polygon(sq, {2.1, 0.0}));
  CHECK_FALSE(geom::point_in_polygon(sq, {0.0, -2.0001}));
}

TEST_CASE("point_in_polygon on a concave polygon") {
  // L-shape.
  const geom::Polygon l = {{0, 0}, {4, 0}, {4, 2}, {2, 2}, {2, 4}, {0, 4}};
  CHECK(geom::point_in_polygon(l, {1.0, 3.0}));
  CHECK(geom::point_in_polygon(l, {3.0, 1.0}));
  CHECK_FALSE(geom::point_in_polygon(l, {3.0, 3.0}));
}

TEST_CASE("polygon_is_simple") {
  CHECK(geom::polygon_is_simple(unit_square()));
  const geom::Polygon bowtie = {{0, 0}, {2, 2}, {2, 0}, {0, 2}};
  CHECK_FALSE(geom::polygon_is_simple(bowtie));
  CHECK_FALSE(geom::polygon_is_simple({{0, 0}, {1, 0}}));
}

TEST_CASE("distance_outside") {
  const geom::Polygon sq = unit_square(1.0);
  CHECK(geom::distance_outside(sq, {0.2, -0.7}).d_out == 0.0);
  const auto hit = geom::distance_outside(sq, {3.0, 0.0});
  CHECK(hit.d_out == doctest::Approx(2.0));
  CHECK(hit.nearest.x() == doctest::Approx(1.0));
  CHECK(hit.nearest.y() == doctest::Approx(0.0));
  // Corner region projects to the vertex.
  const auto corner = geom::distance_outside(sq, {2.0, 2.0});
  CHECK(corner.d_out == doctest::Approx(std::sqrt(2.0)));
  CHECK(corner.nearest.x() == doctest::Approx(1.0));
  CHECK(corner.nearest.y() == doctest::Approx(1.0));
}

TEST_CASE("distance_outside agrees with dense boundary sampling") {
  const geom::Polygon l = {{0, 0}, {4, 0}, {4, 2}, {2, 2}, {2, 4}, {0, 4}};
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec2 p{uniform(rng, -2.0, 6.0), uniform(rng, -2.0, 6.0)};
    const auto hit = geom::distance_outside(l, p);
    // Brute force: sample the boundary at 1 mm resolution.
    double best = 1e18;
    const std::size_t n = l.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = l[i], b = l[(i + 1) % n];
      const int steps = static_cast<int>((b - a).norm() / 0.001);
      for (int s = 0; s <= steps; ++s) {
        const Vec2 q = a + (b - a) * (static_cast<double>(s) / steps);
        best = std::min(best, (q - p).norm());
      }
    }
    if (geom::point_in_polygon(l, p)) {
      CHECK(hit.d_out == 0.0);
    } else {
      CHECK(hit.d_out == doctest::Approx(best).epsilon(1e-3));
    }
  }
}

TEST_CASE("arclength sampling and projection") {
  const geom::Polyline line = {{0, 0}, {10, 0}, {10, 5}};
  CHECK(geom::polyline_length(line) == doctest::Approx(15.0));
  const auto p = geom::point_at_arclength(line, 12.0);
  CHECK(p.point.x() == doctest::Approx(10.0));
  CHECK(p.point.y() == doctest::Approx(2.0));
  CHECK(p.tangent.y() == doctest::Approx(1.0));
  CHECK(geom::project_arclength(line, {4.0, 2.0}) == doctest::Approx(4.0));
  // Clamping at the ends.
  CHECK(geom::point_at_arclength(line, -5.0).point.x() == doctest::Approx(0.0));
  CHECK(geom::point_at_arclength(line, 50.0).point.y() == doctest::Approx(5.0));
}

TEST_CASE("resample keeps endpoints and spacing") {
  const geom::Polyline line = {{0, 0}, {7, 0}};
  const auto rs = geom::resample_polyline(line, 2.0);
  REQUIRE(rs.size() >= 2);
  CHECK(rs.front().x() == doctest::Approx(0.0));
  CHECK(rs.back().x() == doctest::Approx(7.0));
  for (std::size_t i = 1; i < rs.size(); ++i)
    CHECK((rs[i] - rs[i - 1]).norm() <= 2.0 + 1e-9);
}

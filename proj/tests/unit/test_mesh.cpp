// Background and immersed meshes, point location.
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fictsolve/error.hpp"
#include "fictsolve/mesh.hpp"

using namespace fictsolve;

TEST_CASE("background mesh sizes") {
  const BackgroundMesh m(3);
  CHECK(m.cells_per_side() == 8);
  CHECK(m.h() == doctest::Approx(0.125));
  CHECK(m.cell_count() == 64);
  CHECK(m.vertex_count() == 81);
}

TEST_CASE("locate_point uses floor division with reference coordinates") {
  const BackgroundMesh m(2);
  const CellLocation loc = locate_point(m, {0.3, 0.7});
  CHECK(loc.i == 1);
  CHECK(loc.j == 2);
  CHECK(loc.xi == doctest::Approx(0.2));
  CHECK(loc.eta == doctest::Approx(0.8));
  const Point back = reference_to_physical(m, loc);
  CHECK(back[0] == doctest::Approx(0.3));
  CHECK(back[1] == doctest::Approx(0.7));
}

TEST_CASE("locate_point maps the upper boundary into the last cell") {
  const BackgroundMesh m(2);
  const CellLocation loc = locate_point(m, {1.0, 1.0});
  CHECK(loc.i == 3);
  CHECK(loc.j == 3);
  CHECK(loc.xi == doctest::Approx(1.0));
}

TEST_CASE("locate_point rejects points outside the unit square") {
  const BackgroundMesh m(2);
  CHECK_THROWS_AS(locate_point(m, {1.2, 0.5}), DomainError);
  CHECK_THROWS_AS(locate_point(m, {0.5, -0.1}), DomainError);
}

TEST_CASE("circle polyline is closed and counterclockwise with uniform facets") {
  const ImmersedMesh c = build_interface(InterfaceSpec::circle({0.5, 0.5}, 0.21, 16));
  CHECK(c.is_closed());
  CHECK(c.vertex_count() == 16);
  CHECK(c.segment_count() == 16);
  const double chord = 2 * 0.21 * std::sin(std::numbers::pi / 16);
  CHECK(c.h_gamma() == doctest::Approx(chord));
  double area2 = 0;
  for (const auto& s : c.segments()) {
    const Point& a = c.vertices()[s[0]];
    const Point& b = c.vertices()[s[1]];
    area2 += a[0] * b[1] - b[0] * a[1];
  }
  CHECK(area2 > 0);
}

TEST_CASE("square perimeter") {
  const ImmersedMesh s = build_interface(InterfaceSpec::square(0.25, 0.5, 12));
  CHECK(s.is_closed());
  CHECK(s.total_length() == doctest::Approx(1.0));
}

TEST_CASE("flower stays inside the unit square") {
  const ImmersedMesh f = build_interface(InterfaceSpec::flower(0.2, 0.04, {0.5, 0.5}, 10, 64));
  for (const auto& v : f.vertices()) {
    CHECK(v[0] > 0.0);
    CHECK(v[0] < 1.0);
    CHECK(v[1] > 0.0);
    CHECK(v[1] < 1.0);
  }
  CHECK(f.is_closed());
}

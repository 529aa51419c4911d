#include <doctest.h>

#include <cmath>

#include "cutfv/common.hpp"
#include "cutfv/curve.hpp"

using namespace cutfv;

TEST_CASE("poly_roots_01 linear and cubic pinned cases") {
  // x(t) = 2t - 1, root of x = 0 at t = 1/2.
  auto r = poly_roots_01({-1.0, 2.0, 0.0, 0.0}, 1, 0.0);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-13));

  // Cubic with roots 0.2, 0.5, 0.9: expand (t-.2)(t-.5)(t-.9).
  std::array<double, 4> c{-0.09, 0.73, -1.6, 1.0};
  r = poly_roots_01(c, 3, 0.0);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r[2] == doctest::Approx(0.9).epsilon(1e-12));

  // Root exactly at an endpoint.
  r = poly_roots_01({0.0, 1.0, 0.0, 0.0}, 1, 0.0);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == 0.0);

  // No real root in [0,1].
  r = poly_roots_01({1.0, 1.0, 0.0, 0.0}, 1, 0.0);
  CHECK(r.empty());

  // Nonzero target: 3t - 1 = 0.5 at t = 0.5.
  r = poly_roots_01({-1.0, 3.0, 0.0, 0.0}, 1, 0.5);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("poly_roots_01 rejects exact tangency") {
  // (t - 1/2)^2 touches zero without a sign change.
  CHECK_THROWS_AS(poly_roots_01({0.25, -1.0, 1.0, 0.0}, 2, 0.0), TangencyError);
  // A touch offset by more than the detection window is simply not a root.
  auto r = poly_roots_01({0.25 + 1e-6, -1.0, 1.0, 0.0}, 2, 0.0);
  CHECK(r.empty());
}

TEST_CASE("polygon builder: orientation, closure, winding") {
  std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  Curve c = Curve::polygon(sq, /*keep_interior=*/true);
  CHECK(c.ccw());
  CHECK(c.piece_count() == 4);
  CHECK(c.winding_number({0.5, 0.5}) == 1);
  CHECK(c.winding_number({1.5, 0.5}) == 0);
  CHECK(c.winding_number({-0.3, 0.9}) == 0);
  CHECK(c.fluid_side_contains({0.5, 0.5}));
  CHECK(!c.fluid_side_contains({2.0, 2.0}));

  // keep_interior = false flips traversal so the outside is the fluid side.
  Curve cx = Curve::polygon(sq, /*keep_interior=*/false);
  CHECK(!cx.ccw());
  CHECK(cx.winding_number({0.5, 0.5}) == -1);
  CHECK(!cx.fluid_side_contains({0.5, 0.5}));
  CHECK(cx.fluid_side_contains({2.0, 2.0}));

  // Vertex order should not matter: CW input gets normalized.
  std::vector<Vec2> sq_cw{{0, 0}, {0, 1}, {1, 1}, {1, 0}};
  Curve c2 = Curve::polygon(sq_cw, true);
  CHECK(c2.ccw());

  CHECK_THROWS_AS(Curve::polygon({{0, 0}, {1, 1}}, true), UnsupportedGeometry);
  // Bowtie self-intersection.
  CHECK_THROWS_AS(Curve::polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}, true),
                  UnsupportedGeometry);
}

TEST_CASE("flower builder matches the analytic curve") {
  const double r0 = 0.25, amp = 0.05;
  const int freq = 6;
  Curve c = Curve::flower({0, 0}, r0, amp, freq, /*keep_exterior=*/true);
  CHECK(!c.ccw());  // exterior kept -> clockwise so fluid is on the left

  auto gamma = [&](double th) -> Vec2 {
    double r = r0 + amp * std::cos(freq * th);
    return {r * std::cos(th), r * std::sin(th)};
  };
  // Deviation from the analytic boundary stays within the geometric budget
  // for a unit box (1e-11 times the diagonal).
  CHECK(c.max_deviation(gamma, 2.0 * M_PI) < 1e-11 * std::sqrt(2.0));

  // Fluid side is the exterior.
  CHECK(c.fluid_side_contains({0.45, 0.45}));
  CHECK(c.fluid_side_contains({0.31, 0.0}));
  CHECK(!c.fluid_side_contains({0.0, 0.0}));
  CHECK(!c.fluid_side_contains({0.29, 0.0}));
  // Near a waist the body is thin: just outside is fluid.
  CHECK(c.fluid_side_contains({0.0, 0.21}));
  CHECK(!c.fluid_side_contains({0.0, 0.19}));

  // Tips pull strictly inside x = 0.3 so tangent grid lines are missed.
  CHECK(c.bbox().xmax < 0.3);
  CHECK(c.bbox().xmin > -0.3);
}

TEST_CASE("ellipse builder matches the analytic curve") {
  const Vec2 ctr{0.5, 0.5};
  const double a = 0.125, b = 0.25;
  Curve c = Curve::ellipse(ctr, a, b, /*keep_exterior=*/true);
  CHECK(!c.ccw());

  auto gamma = [&](double th) -> Vec2 {
    return {ctr.x + a * std::cos(th), ctr.y + b * std::sin(th)};
  };
  CHECK(c.max_deviation(gamma, 2.0 * M_PI) < 1e-11 * std::sqrt(2.0));

  CHECK(c.fluid_side_contains({0.9, 0.9}));
  CHECK(!c.fluid_side_contains({0.5, 0.5}));
  CHECK(!c.fluid_side_contains({0.5, 0.7}));
  CHECK(c.fluid_side_contains({0.5, 0.76}));

  // Axis extrema pull strictly inside their tangent lines.
  CHECK(c.bbox().xmax < 0.625);
  CHECK(c.bbox().xmin > 0.375);
  CHECK(c.bbox().ymax < 0.75);
  CHECK(c.bbox().ymin > 0.25);

  // keep_exterior = false orients the other way.
  Curve ci = Curve::ellipse(ctr, a, b, false);
  CHECK(ci.ccw());
  CHECK(ci.fluid_side_contains({0.5, 0.5}));
  CHECK(!ci.fluid_side_contains({0.9, 0.9}));
}

TEST_CASE("point_at and nearest_parameter are mutually consistent") {
  Curve c = Curve::ellipse({0.5, 0.5}, 0.125, 0.25, true);
  for (double s : {0.0, 0.13, 0.37, 0.5, 0.77, 0.999}) {
    Vec2 p = c.point_at(s);
    double s2 = c.nearest_parameter(p);
    Vec2 q = c.point_at(s2);
    CHECK((p - q).norm() < 1e-10);
  }
  // A far-away point projects to the nearest axis extremum region.
  double s_right = c.nearest_parameter({5.0, 0.5});
  Vec2 q = c.point_at(s_right);
  CHECK(q.x == doctest::Approx(0.625).epsilon(1e-6));
  CHECK(q.y == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("winding number on concave polygon") {
  // L-shape: concavity exercises multi-crossing rays.
  std::vector<Vec2> L{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  Curve c = Curve::polygon(L, true);
  CHECK(c.winding_number({0.5, 0.5}) == 1);
  CHECK(c.winding_number({1.5, 0.5}) == 1);
  CHECK(c.winding_number({0.5, 1.5}) == 1);
  CHECK(c.winding_number({1.5, 1.5}) == 0);
  CHECK(c.winding_number({2.5, 0.5}) == 0);
}

TEST_CASE("piece bounding boxes are tight and contain their pieces") {
  Curve c = Curve::flower({0, 0}, 0.25, 0.05, 6, true);
  for (int k = 0; k < c.piece_count(); ++k) {
    const BBox& bb = c.piece_bbox(k);
    for (int i = 0; i <= 16; ++i) {
      Vec2 p = c.piece(k).point(i / 16.0);
      CHECK(p.x >= bb.xmin - 1e-14);
      CHECK(p.x <= bb.xmax + 1e-14);
      CHECK(p.y >= bb.ymin - 1e-14);
      CHECK(p.y <= bb.ymax + 1e-14);
    }
  }
}

#pragma once

#include <array>
#include <functional>
#include <vector>

#include "cutfv/common.hpp"

namespace cutfv {

/// One parametric polynomial piece, t in [0, 1], degree <= 3 (cubic Hermite
/// interpolants for smooth shapes, linear pieces for polygons).
struct CurvePiece {
  std::array<double, 4> cx{};
  std::array<double, 4> cy{};
  int deg = 3;

  Vec2 point(double t) const {
    double x = cx[deg], y = cy[deg];
    for (int k = deg - 1; k >= 0; --k) {
      x = x * t + cx[k];
      y = y * t + cy[k];
    }
    return {x, y};
  }
  Vec2 derivative(double t) const {
    double x = deg * cx[deg], y = deg * cy[deg];
    for (int k = deg - 1; k >= 1; --k) {
      x = x * t + k * cx[k];
      y = y * t + k * cy[k];
    }
    return {x, y};
  }
};

struct BBox {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool contains(Vec2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
};

/// Roots of c(t) - target = 0 in [0, 1], c a polynomial of degree deg given
/// by coefficients.  Bracketed bisection on a uniform sample grid followed by
/// Newton polish; tolerance 1e-13 in t.  Tangential touches without sign
/// change are not roots; an exact touch (value below 1e-14 of the coefficient
/// scale at a sample with no adjacent sign change) raises TangencyError.
std::vector<double> poly_roots_01(const std::array<double, 4>& c, int deg, double target);

/// Closed oriented curve: the fluid region lies on the LEFT of the direction
/// of travel.  Pieces join continuously and the last piece ends at the start
/// of the first.
class Curve {
 public:
  /// Flower r(theta) = r0 + amp*cos(freq*theta) around the origin; cubic
  /// Hermite fit with knots at half-offsets.  The radius is nudged by 5e-12
  /// toward the non-kept side so that the axis-aligned tangencies of the
  /// petal tips and waists fall strictly on one side of any grid line.
  static Curve flower(Vec2 center, double r0, double amp, int freq, bool keep_exterior,
                      int n_pieces = 4096);

  /// Axis-aligned ellipse, same conventions and the same 5e-12 nudge.
  static Curve ellipse(Vec2 center, double a, double b, bool keep_exterior,
                       int n_pieces = 1024);

  /// Polygon through the given vertices (closed, consecutive distinct).
  static Curve polygon(std::vector<Vec2> pts, bool keep_interior);

  /// Generic closed Hermite fit of an analytic curve gamma(theta) on
  /// [0, period); traversal direction follows increasing theta when
  /// `forward`, else decreasing.  Knots at theta = period*(j+1/2)/n.
  static Curve fit_analytic(const std::function<Vec2(double)>& gamma,
                            const std::function<Vec2(double)>& dgamma, double period,
                            int n_pieces, bool forward);

  int piece_count() const { return static_cast<int>(pieces_.size()); }
  const CurvePiece& piece(int k) const { return pieces_[k]; }
  const BBox& piece_bbox(int k) const { return piece_boxes_[k]; }
  const BBox& bbox() const { return box_; }
  bool ccw() const { return ccw_; }

  /// Point at global parameter s in [0, 1), piece k covering [k/n, (k+1)/n).
  Vec2 point_at(double s) const;

  /// Winding number about p (p not on the curve).  Ray casting with root
  /// isolation per piece; retries with rotated rays when a crossing is too
  /// close to degenerate.
  int winding_number(Vec2 p) const;

  /// True when p lies in the region left of the travel direction.
  bool fluid_side_contains(Vec2 p) const {
    return (winding_number(p) != 0) == ccw_;
  }

  /// Global parameter of the curve point nearest to p.
  double nearest_parameter(Vec2 p) const;

  /// Max distance from the curve to reference points (validation helper).
  double max_deviation(const std::function<Vec2(double)>& gamma, double period,
                       int samples_per_piece = 7) const;

 private:
  void finalize();  // bboxes, orientation, closure check

  std::vector<CurvePiece> pieces_;
  std::vector<BBox> piece_boxes_;
  BBox box_;
  bool ccw_ = true;
};

}  // namespace cutfv

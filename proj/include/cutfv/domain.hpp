#pragma once

#include <string>
#include <vector>

#include "cutfv/common.hpp"
#include "cutfv/curve.hpp"

namespace cutfv {

struct BoxSpec {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double diagonal() const { return std::sqrt(width() * width() + height() * height()); }
};

// The computational domain: an axis-aligned rectangle intersected with the
// fluid side of a set of disjoint closed curves.  Curves are oriented so
// that the fluid lies on the left of the traversal direction.
struct DomainSpec {
  BoxSpec box;
  std::vector<Curve> curves;
};

class Domain {
 public:
  // Validates the spec: curves must be closed, simple, pairwise disjoint,
  // strictly inside the rectangle, and none may lie in the excluded side of
  // another.  Violations raise UnsupportedGeometry.
  explicit Domain(DomainSpec spec);

  const BoxSpec& box() const { return box_; }
  int curve_count() const { return static_cast<int>(curves_.size()); }
  const Curve& curve(int k) const { return curves_[k]; }
  double diagonal() const { return box_.diagonal(); }

  // True iff p is strictly inside the rectangle and on the fluid side of
  // every curve.
  bool contains(Vec2 p) const;

  double curve_length(int k) const { return cumlen_[k].back(); }
  // Cumulative arc length from parameter 0 to parameter s in [0,1).
  double arc_length_at(int k, double s) const;

 private:
  BoxSpec box_;
  std::vector<Curve> curves_;
  std::vector<std::vector<double>> cumlen_;  // per curve: per-piece cumulative length

  void validate() const;
};

// Plain-text domain description: one record per line, `#` comments.
//   box x0=-0.5 y0=-0.5 x1=0.5 y1=0.5
//   curve kind=flower cx=0 cy=0 r0=0.25 amp=0.05 freq=6 keep=exterior
//   curve kind=ellipse cx=0.5 cy=0.5 a=0.125 b=0.25 keep=exterior
//   curve kind=polygon points=0,0;1,0;1,1;0,1 keep=interior
Domain parse_domain(const std::string& text);
Domain load_domain(const std::string& path);  // IoError on missing/invalid file

}  // namespace cutfv

#include "cutfv/curve.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace cutfv {

namespace {

constexpr double kBoundaryNudge = 5e-12;

double poly_eval(const std::array<double, 4>& c, int deg, double t) {
  double v = c[deg];
  for (int k = deg - 1; k >= 0; --k) v = v * t + c[k];
  return v;
}

double poly_deriv(const std::array<double, 4>& c, int deg, double t) {
  double v = deg * c[deg];
  for (int k = deg - 1; k >= 1; --k) v = v * t + k * c[k];
  return v;
}

}  // namespace

std::vector<double> poly_roots_01(const std::array<double, 4>& c, int deg, double target) {
  std::array<double, 4> f = c;
  f[0] -= target;
  double scale = std::abs(target);
  for (int k = 0; k <= deg; ++k) scale = std::max(scale, std::abs(c[k]));
  if (scale == 0.0) return {};

  const int ns = 32;
  std::array<double, ns + 1> val;
  for (int i = 0; i <= ns; ++i) val[i] = poly_eval(f, deg, static_cast<double>(i) / ns);

  std::vector<double> roots;
  for (int i = 0; i <= ns; ++i) {
    if (std::abs(val[i]) <= 1e-14 * scale) {
      // Sample sits on the line.  A transversal crossing here is a valid
      // root; a touch with equal signs on both sides is a tangency.
      double lo = std::max(0.0, (i - 1.0) / ns), hi = std::min(1.0, (i + 1.0) / ns);
      double vl = poly_eval(f, deg, lo), vr = poly_eval(f, deg, hi);
      if (vl * vr > 0.0 && std::abs(val[i]) <= 1e-14 * scale &&
          std::abs(vl) > 1e-12 * scale && std::abs(vr) > 1e-12 * scale)
        throw TangencyError("curve tangent to a grid line");
      roots.push_back(static_cast<double>(i) / ns);
      val[i] = 0.0;
    }
  }
  for (int i = 0; i < ns; ++i) {
    if (val[i] == 0.0 || val[i + 1] == 0.0) continue;
    if (val[i] * val[i + 1] > 0.0) continue;
    double lo = static_cast<double>(i) / ns, hi = static_cast<double>(i + 1) / ns;
    double vl = val[i];
    for (int it = 0; it < 48; ++it) {
      double mid = 0.5 * (lo + hi);
      double vm = poly_eval(f, deg, mid);
      if (vm == 0.0) {
        lo = hi = mid;
        break;
      }
      if (vl * vm < 0.0)
        hi = mid;
      else {
        lo = mid;
        vl = vm;
      }
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {  // Newton polish
      double fv = poly_eval(f, deg, t), dv = poly_deriv(f, deg, t);
      if (dv == 0.0) break;
      double tn = t - fv / dv;
      if (tn < lo - 1e-13 || tn > hi + 1e-13) break;
      t = tn;
    }
    roots.push_back(std::clamp(t, 0.0, 1.0));
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-13; }),
              roots.end());
  return roots;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

Curve Curve::fit_analytic(const std::function<Vec2(double)>& gamma,
                          const std::function<Vec2(double)>& dgamma, double period,
                          int n_pieces, bool forward) {
  Curve c;
  c.pieces_.resize(n_pieces);
  std::vector<Vec2> knot(n_pieces), tang(n_pieces);
  for (int j = 0; j < n_pieces; ++j) {
    // Knots at half-offsets keep axis-extrema interior to pieces.
    double th = period * (j + 0.5) / n_pieces;
    if (!forward) th = period - th;
    knot[j] = gamma(th);
    Vec2 d = dgamma(th);
    tang[j] = forward ? d : Vec2{-d.x, -d.y};
  }
  const double dth = period / n_pieces;
  for (int j = 0; j < n_pieces; ++j) {
    Vec2 p0 = knot[j], p1 = knot[(j + 1) % n_pieces];
    Vec2 m0 = tang[j] * dth, m1 = tang[(j + 1) % n_pieces] * dth;
    CurvePiece& pc = c.pieces_[j];
    pc.deg = 3;
    pc.cx = {p0.x, m0.x, -3 * p0.x - 2 * m0.x + 3 * p1.x - m1.x,
             2 * p0.x + m0.x - 2 * p1.x + m1.x};
    pc.cy = {p0.y, m0.y, -3 * p0.y - 2 * m0.y + 3 * p1.y - m1.y,
             2 * p0.y + m0.y - 2 * p1.y + m1.y};
  }
  c.finalize();
  return c;
}

Curve Curve::flower(Vec2 center, double r0, double amp, int freq, bool keep_exterior,
                    int n_pieces) {
  if (r0 - std::abs(amp) <= 0.0)
    throw UnsupportedGeometry("flower radius not positive everywhere");
  const double nudge = keep_exterior ? -kBoundaryNudge : kBoundaryNudge;
  auto rho = [=](double th) { return r0 + amp * std::cos(freq * th) + nudge; };
  auto drho = [=](double th) { return -amp * freq * std::sin(freq * th); };
  auto gamma = [=](double th) -> Vec2 {
    double r = rho(th);
    return {center.x + r * std::cos(th), center.y + r * std::sin(th)};
  };
  auto dgamma = [=](double th) -> Vec2 {
    double r = rho(th), dr = drho(th);
    return {dr * std::cos(th) - r * std::sin(th), dr * std::sin(th) + r * std::cos(th)};
  };
  // Fluid on the left: exterior kept -> clockwise traversal.
  return fit_analytic(gamma, dgamma, 2.0 * M_PI, n_pieces, /*forward=*/!keep_exterior);
}

Curve Curve::ellipse(Vec2 center, double a, double b, bool keep_exterior, int n_pieces) {
  if (a <= 0.0 || b <= 0.0) throw UnsupportedGeometry("ellipse semi-axes must be positive");
  const double nudge = keep_exterior ? -kBoundaryNudge : kBoundaryNudge;
  const double ae = a + nudge, be = b + nudge;
  auto gamma = [=](double th) -> Vec2 {
    return {center.x + ae * std::cos(th), center.y + be * std::sin(th)};
  };
  auto dgamma = [=](double th) -> Vec2 {
    return {-ae * std::sin(th), be * std::cos(th)};
  };
  return fit_analytic(gamma, dgamma, 2.0 * M_PI, n_pieces, /*forward=*/!keep_exterior);
}

Curve Curve::polygon(std::vector<Vec2> pts, bool keep_interior) {
  const int n = static_cast<int>(pts.size());
  if (n < 3) throw UnsupportedGeometry("polygon needs at least 3 vertices");
  double area2 = 0.0;
  for (int i = 0; i < n; ++i) area2 += pts[i].cross(pts[(i + 1) % n]);
  if (area2 == 0.0) throw UnsupportedGeometry("degenerate polygon");
  // Simple-polygon check: no two non-adjacent edges intersect.
  auto seg_intersect = [](Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
      double v = (q - p).cross(r - p);
      return v > 0 ? 1 : (v < 0 ? -1 : 0);
    };
    int o1 = orient(a, b, c), o2 = orient(a, b, d);
    int o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 != o2 && o3 != o4;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (seg_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]))
        throw UnsupportedGeometry("self-intersecting polygon");
    }
  bool ccw_now = area2 > 0.0;
  if (ccw_now != keep_interior) std::reverse(pts.begin(), pts.end());

  Curve c;
  c.pieces_.resize(n);
  for (int i = 0; i < n; ++i) {
    Vec2 p = pts[i], q = pts[(i + 1) % n];
    if ((q - p).norm() == 0.0) throw UnsupportedGeometry("repeated polygon vertex");
    CurvePiece& pc = c.pieces_[i];
    pc.deg = 1;
    pc.cx = {p.x, q.x - p.x, 0.0, 0.0};
    pc.cy = {p.y, q.y - p.y, 0.0, 0.0};
  }
  c.finalize();
  return c;
}

void Curve::finalize() {
  const int n = piece_count();
  piece_boxes_.resize(n);
  auto axis_range = [](const std::array<double, 4>& c, int deg, double& lo, double& hi) {
    lo = std::min(poly_eval(c, deg, 0.0), poly_eval(c, deg, 1.0));
    hi = std::max(poly_eval(c, deg, 0.0), poly_eval(c, deg, 1.0));
    if (deg >= 2) {
      // Critical points of a cubic: roots of a quadratic derivative.
      double a = 3 * c[3], b = 2 * c[2], d = c[1];
      if (deg == 2 || a == 0.0) {
        if (b != 0.0) {
          double t = -d / b;
          if (t > 0 && t < 1) {
            double v = poly_eval(c, deg, t);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
      } else {
        double disc = b * b - 4 * a * d;
        if (disc >= 0) {
          double sq = std::sqrt(disc);
          for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)})
            if (t > 0 && t < 1) {
              double v = poly_eval(c, deg, t);
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
        }
      }
    }
  };
  box_ = BBox{1e300, -1e300, 1e300, -1e300};
  for (int k = 0; k < n; ++k) {
    BBox& b = piece_boxes_[k];
    axis_range(pieces_[k].cx, pieces_[k].deg, b.xmin, b.xmax);
    axis_range(pieces_[k].cy, pieces_[k].deg, b.ymin, b.ymax);
    box_.xmin = std::min(box_.xmin, b.xmin);
    box_.xmax = std::max(box_.xmax, b.xmax);
    box_.ymin = std::min(box_.ymin, b.ymin);
    box_.ymax = std::max(box_.ymax, b.ymax);
  }
  for (int k = 0; k < n; ++k) {
    Vec2 e = pieces_[k].point(1.0), s = pieces_[(k + 1) % n].point(0.0);
    if ((e - s).norm() > 1e-12 * (1.0 + box_.xmax - box_.xmin))
      throw UnsupportedGeometry("curve pieces do not close up");
  }
  // Orientation via the polyline signed area of piece endpoints plus midpoint
  // samples (adequate for the shapes handled here).
  double area2 = 0.0;
  Vec2 prev = pieces_[0].point(0.0);
  for (int k = 0; k < n; ++k) {
    for (double t : {0.5, 1.0}) {
      Vec2 p = pieces_[k].point(t);
      area2 += prev.cross(p);
      prev = p;
    }
  }
  ccw_ = area2 > 0.0;
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

Vec2 Curve::point_at(double s) const {
  const int n = piece_count();
  double u = (s - std::floor(s)) * n;
  int k = std::min(static_cast<int>(u), n - 1);
  return pieces_[k].point(u - k);
}

int Curve::winding_number(Vec2 p) const {
  // Cast a ray in direction (cos a, sin a); sum signed transversal crossings.
  static const double angles[] = {0.0, 0.437, 0.911, 1.553, 2.269};
  for (double ang : angles) {
    double ca = std::cos(ang), sa = std::sin(ang);
    int wind = 0;
    bool ok = true;
    for (int k = 0; k < piece_count() && ok; ++k) {
      const CurvePiece& pc = pieces_[k];
      const BBox& bb = piece_boxes_[k];
      // Quick reject: piece bbox entirely on the back side or laterally away.
      double rad = std::max(bb.xmax - bb.xmin, bb.ymax - bb.ymin);
      Vec2 ctr{0.5 * (bb.xmin + bb.xmax), 0.5 * (bb.ymin + bb.ymax)};
      Vec2 rel = ctr - p;
      double along = rel.x * ca + rel.y * sa;
      double across = -rel.x * sa + rel.y * ca;
      if (along < -rad || std::abs(across) > rad) continue;
      // Signed lateral offset g(t) = -(x-px) sin a + (y-py) cos a.
      std::array<double, 4> g{};
      for (int d = 0; d <= pc.deg; ++d) g[d] = -pc.cx[d] * sa + pc.cy[d] * ca;
      g[0] += p.x * sa - p.y * ca;
      std::vector<double> roots;
      try {
        roots = poly_roots_01(g, pc.deg, 0.0);
      } catch (const TangencyError&) {
        ok = false;
        break;
      }
      for (double t : roots) {
        if (t >= 1.0 - 1e-13 && k != piece_count() - 1) continue;  // junction dedupe
        Vec2 q = pc.point(t);
        double along_q = (q.x - p.x) * ca + (q.y - p.y) * sa;
        if (std::abs(along_q) < 1e-13) {
          ok = false;  // point effectively on the curve for this ray
          break;
        }
        if (along_q < 0) continue;
        Vec2 d = pc.derivative(t);
        double trans = -d.x * sa + d.y * ca;  // lateral speed
        if (std::abs(trans) < 1e-10 * (std::abs(d.x) + std::abs(d.y))) {
          ok = false;  // grazing crossing; retry with another ray
          break;
        }
        wind += trans > 0 ? 1 : -1;
      }
    }
    if (ok) return wind;
  }
  throw GeometryError("winding_number: no admissible ray direction");
}

double Curve::nearest_parameter(Vec2 p) const {
  const int n = piece_count();
  double best = 1e300;
  int bestk = 0;
  double bestt = 0.0;
  for (int k = 0; k < n; ++k) {
    const BBox& bb = piece_boxes_[k];
    double dx = std::max({bb.xmin - p.x, 0.0, p.x - bb.xmax});
    double dy = std::max({bb.ymin - p.y, 0.0, p.y - bb.ymax});
    if (dx * dx + dy * dy > best) continue;
    for (int i = 0; i <= 4; ++i) {
      double t = i / 4.0;
      double d = (pieces_[k].point(t) - p).norm2();
      if (d < best) {
        best = d;
        bestk = k;
        bestt = t;
      }
    }
  }
  // Golden-section refinement on the best piece neighborhood.
  auto dist2 = [&](double u) {  // u global in piece units
    double uu = u - std::floor(u / n) * n;
    int k = std::min(static_cast<int>(uu), n - 1);
    return (pieces_[k].point(uu - k) - p).norm2();
  };
  double lo = bestk + bestt - 0.6, hi = bestk + bestt + 0.6;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = dist2(x1), f2 = dist2(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = dist2(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = dist2(x2);
    }
  }
  double u = 0.5 * (lo + hi);
  u = u - std::floor(u / n) * n;
  double s = u / n;
  return s - std::floor(s);
}

double Curve::max_deviation(const std::function<Vec2(double)>& gamma, double period,
                            int samples_per_piece) const {
  // Distance from analytic samples to the fitted curve, via nearest point.
  double worst = 0.0;
  const int n = piece_count();
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < samples_per_piece; ++i) {
      double th = period * (k + static_cast<double>(i) / samples_per_piece) / n;
      Vec2 ref = gamma(th);
      double s = nearest_parameter(ref);
      worst = std::max(worst, (point_at(s) - ref).norm());
    }
  return worst;
}

}  // namespace cutfv

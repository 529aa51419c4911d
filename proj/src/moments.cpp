#include "cutfv/moments.hpp"

#include <algorithm>
#include <cmath>

#include "cutfv/linalg.hpp"

namespace cutfv {

namespace {

constexpr int kMaxDegree = 10;  // enough for the degree-6 tables plus headroom

// Powers x^0..x^kmax.
inline void fill_powers(double x, int kmax, double* out) {
  out[0] = 1.0;
  for (int k = 1; k <= kmax; ++k) out[k] = out[k - 1] * x;
}

// 1D integral of (s + d)^a over s in [-1/2, 1/2], closed form.
double segment_power_integral(int a, double d) {
  return (std::pow(d + 0.5, a + 1) - std::pow(d - 0.5, a + 1)) / (a + 1);
}

struct Binomials {
  double c[kMaxDegree + 1][kMaxDegree + 1] = {};
  Binomials() {
    for (int n = 0; n <= kMaxDegree; ++n) {
      c[n][0] = c[n][n] = 1.0;
      for (int k = 1; k < n; ++k) c[n][k] = c[n - 1][k - 1] + c[n - 1][k];
    }
  }
};

const Binomials& binom() {
  static const Binomials b;
  return b;
}

// Gauss-Legendre order that integrates polynomials of the given degree.
int gl_order(int degree) { return std::min(32, degree / 2 + 1); }

// Accumulates the Green's-formula contribution of one boundary sample to the
// area moments: m_α += w * h/(a1+1) * u^{a1+1} v^{a2}, where w carries the
// quadrature weight times dy along the traversal.
void add_area_sample(std::vector<double>& m, int n_max, double h, double u, double v,
                     double w) {
  double pu[kMaxDegree + 2], pv[kMaxDegree + 1];
  fill_powers(u, n_max + 1, pu);
  fill_powers(v, n_max, pv);
  for (int a1 = 0; a1 <= n_max; ++a1) {
    double fu = w * h / (a1 + 1) * pu[a1 + 1];
    for (int a2 = 0; a2 + a1 <= n_max; ++a2)
      m[moment_index(a1, a2)] += fu * pv[a2];
  }
}

// Adds w * u^{a1} v^{a2} to every entry of a line-moment family.
void add_line_sample(std::vector<double>& m, int n_max, double u, double v, double w) {
  double pu[kMaxDegree + 1], pv[kMaxDegree + 1];
  fill_powers(u, n_max, pu);
  fill_powers(v, n_max, pv);
  for (int a1 = 0; a1 <= n_max; ++a1) {
    double fu = w * pu[a1];
    for (int a2 = 0; a2 + a1 <= n_max; ++a2)
      m[moment_index(a1, a2)] += fu * pv[a2];
  }
}

// Area-moment contribution of a straight edge a->b (exact).
void green_straight_edge(std::vector<double>& m, int n_max, Vec2 p, double h, Vec2 a,
                         Vec2 b) {
  double dy = b.y - a.y;
  if (dy == 0.0) return;
  const auto& gl = linalg::gauss_legendre(gl_order(n_max + 1));
  for (size_t q = 0; q < gl.node.size(); ++q) {
    double s = 0.5 + 0.5 * gl.node[q];
    double x = a.x + s * (b.x - a.x), y = a.y + s * (b.y - a.y);
    add_area_sample(m, n_max, h, (x - p.x) / h, (y - p.y) / h, 0.5 * gl.weight[q] * dy);
  }
}

// Line moments of a straight segment a->b with constant outward normal n
// (exact); also accumulates the normal-weighted families.
void straight_boundary_segment(MomentSet& ms, Vec2 a, Vec2 b, Vec2 n) {
  double len = (b - a).norm();
  const auto& gl = linalg::gauss_legendre(gl_order(ms.n_max));
  for (size_t q = 0; q < gl.node.size(); ++q) {
    double s = 0.5 + 0.5 * gl.node[q];
    double u = (a.x + s * (b.x - a.x) - ms.p.x) / ms.h;
    double v = (a.y + s * (b.y - a.y) - ms.p.y) / ms.h;
    double w = 0.5 * gl.weight[q] * len;
    add_line_sample(ms.line, ms.n_max, u, v, w);
    add_line_sample(ms.n1, ms.n_max, u, v, w * n.x);
    add_line_sample(ms.n2, ms.n_max, u, v, w * n.y);
  }
}

// Curve-edge contributions: area moments via Green (exact for the parametric
// degree), normal moments via n ds = (y', -x') dt (exact), and arc-length
// line moments (Gauss-Legendre 20 per sub-piece edge; the integrand is
// analytic, so this is far below the geometric fit error).
void curve_edge_moments(MomentSet& ms, const CurvePiece& cp, double t0, double t1,
                        bool boundary_too) {
  double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
  int deg = cp.deg;
  {
    const auto& gl = linalg::gauss_legendre(gl_order(deg * (ms.n_max + 1) + deg - 1));
    for (size_t q = 0; q < gl.node.size(); ++q) {
      double t = mid + half * gl.node[q];
      Vec2 pt = cp.point(t), dv = cp.derivative(t);
      double u = (pt.x - ms.p.x) / ms.h, v = (pt.y - ms.p.y) / ms.h;
      double w = gl.weight[q] * half;
      add_area_sample(ms.cell, ms.n_max, ms.h, u, v, w * dv.y);
      if (boundary_too) {
        add_line_sample(ms.n1, ms.n_max, u, v, w * dv.y);
        add_line_sample(ms.n2, ms.n_max, u, v, -w * dv.x);
      }
    }
  }
  if (boundary_too) {
    const auto& gl = linalg::gauss_legendre(deg >= 2 ? 20 : gl_order(ms.n_max));
    for (size_t q = 0; q < gl.node.size(); ++q) {
      double t = mid + half * gl.node[q];
      Vec2 pt = cp.point(t), dv = cp.derivative(t);
      double u = (pt.x - ms.p.x) / ms.h, v = (pt.y - ms.p.y) / ms.h;
      add_line_sample(ms.line, ms.n_max, u, v, gl.weight[q] * std::abs(half) * dv.norm());
    }
  }
}

// Side geometry of a grid cell: the fixed coordinate of each face line and
// the outward normal when that face lies on the domain wall.
struct SideFrame {
  Vec2 a, b;  // endpoints of the fluid interval [u0,u1] mapped to the plane
  Vec2 normal;
};

SideFrame side_segment(const Grid& g, CellIndex ci, int side, double u0, double u1) {
  double xl = g.x0 + ci.i * g.h, xr = xl + g.h;
  double yb = g.y0 + ci.j * g.h, yt = yb + g.h;
  switch (side) {
    case 0: return {{xl, u0}, {xl, u1}, {-1.0, 0.0}};
    case 1: return {{xr, u0}, {xr, u1}, {1.0, 0.0}};
    case 2: return {{u0, yb}, {u1, yb}, {0.0, -1.0}};
    default: return {{u0, yt}, {u1, yt}, {0.0, 1.0}};
  }
}

// Exact line moments of a straight face segment, accumulated into `out`.
void face_segment_moments(std::vector<double>& out, int n_max, Vec2 p, double h, Vec2 a,
                          Vec2 b) {
  double len = (b - a).norm();
  const auto& gl = linalg::gauss_legendre(gl_order(n_max));
  for (size_t q = 0; q < gl.node.size(); ++q) {
    double s = 0.5 + 0.5 * gl.node[q];
    double u = (a.x + s * (b.x - a.x) - p.x) / h;
    double v = (a.y + s * (b.y - a.y) - p.y) / h;
    add_line_sample(out, n_max, u, v, 0.5 * gl.weight[q] * len);
  }
}

}  // namespace

std::vector<double> square_moments(Vec2 c, double h, Vec2 p, int n_max) {
  std::vector<double> m(moment_count(n_max));
  double d1 = (c.x - p.x) / h, d2 = (c.y - p.y) / h;
  double i1[kMaxDegree + 1], i2[kMaxDegree + 1];
  for (int a = 0; a <= n_max; ++a) {
    i1[a] = segment_power_integral(a, d1);
    i2[a] = segment_power_integral(a, d2);
  }
  for (int a1 = 0; a1 <= n_max; ++a1)
    for (int a2 = 0; a2 + a1 <= n_max; ++a2)
      m[moment_index(a1, a2)] = h * h * i1[a1] * i2[a2];
  return m;
}

std::vector<double> recenter_moments(const std::vector<double>& m, Vec2 q, Vec2 p,
                                     double h, int n_max) {
  const auto& bi = binom();
  double d1 = (q.x - p.x) / h, d2 = (q.y - p.y) / h;
  double pd1[kMaxDegree + 1], pd2[kMaxDegree + 1];
  fill_powers(d1, n_max, pd1);
  fill_powers(d2, n_max, pd2);
  std::vector<double> out(moment_count(n_max));
  for (int a1 = 0; a1 <= n_max; ++a1)
    for (int a2 = 0; a2 + a1 <= n_max; ++a2) {
      double acc = 0.0;
      for (int b1 = 0; b1 <= a1; ++b1)
        for (int b2 = 0; b2 <= a2; ++b2)
          acc += bi.c[a1][b1] * bi.c[a2][b2] * pd1[a1 - b1] * pd2[a2 - b2] *
                 m[moment_index(b1, b2)];
      out[moment_index(a1, a2)] = acc;
    }
  return out;
}

MomentSet cell_moment_set(const Domain& dom, const CutCellSet& cells, int key,
                          int n_max) {
  if (n_max < 0 || n_max > kMaxDegree - 1)
    throw Error("cell_moment_set: unsupported moment degree");
  const Grid& g = cells.grid;
  const double h = g.h;
  const int nm = moment_count(n_max);

  MomentSet ms;
  ms.h = h;
  ms.n_max = n_max;
  ms.cell.assign(nm, 0.0);
  ms.line.assign(nm, 0.0);
  ms.n1.assign(nm, 0.0);
  ms.n2.assign(nm, 0.0);
  for (auto& f : ms.face) f.assign(nm, 0.0);

  const StoredCell* sc = cells.stored_geom(key);
  CellIndex kc = g.index(key);

  if (!sc) {
    if (cells.kind[key] != CellKind::pure)
      throw Error("cell_moment_set: cell holds no control volume");
    ms.p = g.center(kc.i, kc.j);
    ms.cell = square_moments(ms.p, h, ms.p, n_max);
    for (int side = 0; side < 4; ++side) {
      double u0 = side < 2 ? g.y0 + kc.j * h : g.x0 + kc.i * h;
      SideFrame sf = side_segment(g, kc, side, u0, u0 + h);
      face_segment_moments(ms.face[side], n_max, ms.p, h, sf.a, sf.b);
    }
    return ms;
  }

  // Center: midpoint of the bounding box of the constituent cell squares.
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const CellAtom& at : sc->atoms) {
    CellIndex ci = g.index(at.cell);
    xlo = std::min(xlo, g.x0 + ci.i * h);
    xhi = std::max(xhi, g.x0 + (ci.i + 1) * h);
    ylo = std::min(ylo, g.y0 + ci.j * h);
    yhi = std::max(yhi, g.y0 + (ci.j + 1) * h);
  }
  ms.p = {0.5 * (xlo + xhi), 0.5 * (ylo + yhi)};

  const double drop_len = 1e-13 * h;
  for (const CellAtom& at : sc->atoms) {
    if (at.full_square) {
      CellIndex ci = g.index(at.cell);
      std::vector<double> sq = square_moments(g.center(ci.i, ci.j), h, ms.p, n_max);
      for (int k = 0; k < nm; ++k) ms.cell[k] += sq[k];
      continue;
    }
    for (const Loop& lp : at.loops)
      for (const LoopEdge& e : lp.edges) {
        if (!e.on_curve()) {
          green_straight_edge(ms.cell, n_max, ms.p, h, e.a, e.b);
          continue;
        }
        bool keep = (e.b - e.a).norm() >= drop_len;
        if (!keep) ++ms.dropped;
        curve_edge_moments(ms, dom.curve(e.curve).piece(e.piece), e.t0, e.t1, keep);
      }
  }

  for (const WallSeg& w : sc->walls) {
    SideFrame sf = side_segment(g, kc, w.side, w.u0, w.u1);
    if ((sf.b - sf.a).norm() < drop_len) {
      ++ms.dropped;
      continue;
    }
    straight_boundary_segment(ms, sf.a, sf.b, sf.normal);
  }

  for (const CellAtom& at : sc->atoms) {
    if (at.cell != key) continue;
    for (int side = 0; side < 4; ++side)
      for (const FaceSeg& s : at.face_segs[side]) {
        SideFrame sf = side_segment(g, kc, side, s.u0, s.u1);
        face_segment_moments(ms.face[side], n_max, ms.p, h, sf.a, sf.b);
      }
  }

  ms.has_boundary = ms.line[0] > 0.0;
  return ms;
}

MomentTable compute_moments(const Domain& dom, const CutCellSet& cells, int n_max) {
  MomentTable tab;
  tab.n_max = n_max;
  tab.h = cells.grid.h;
  tab.entries.reserve(cells.stored.size());
  for (int key : cells.stored)
    tab.entries.emplace(key, cell_moment_set(dom, cells, key, n_max));
  return tab;
}

std::vector<double> boundary_column(const MomentSet& ms, Vec2 p, int n_out,
                                    BoundaryKind bc, double gamma1, double gamma2) {
  if (!ms.has_boundary)
    throw Error("boundary_column: control volume has no boundary segment");
  if (n_out > ms.n_max) throw Error("boundary_column: degree exceeds the table");
  double g1 = bc == BoundaryKind::dirichlet ? 1.0 : bc == BoundaryKind::neumann ? 0.0 : gamma1;
  double g2 = bc == BoundaryKind::dirichlet ? 0.0 : bc == BoundaryKind::neumann ? 1.0 : gamma2;

  std::vector<double> L = recenter_moments(ms.line, ms.p, p, ms.h, ms.n_max);
  std::vector<double> N1, N2;
  if (g2 != 0.0) {
    N1 = recenter_moments(ms.n1, ms.p, p, ms.h, ms.n_max);
    N2 = recenter_moments(ms.n2, ms.p, p, ms.h, ms.n_max);
  }
  double s = L[0];
  std::vector<double> col(moment_count(n_out), 0.0);
  for (int a1 = 0; a1 <= n_out; ++a1)
    for (int a2 = 0; a2 + a1 <= n_out; ++a2) {
      double val = g1 * L[moment_index(a1, a2)];
      if (g2 != 0.0) {
        double neu = 0.0;
        if (a1 > 0) neu += a1 * N1[moment_index(a1 - 1, a2)];
        if (a2 > 0) neu += a2 * N2[moment_index(a1, a2 - 1)];
        val += g2 * neu / ms.h;
      }
      col[moment_index(a1, a2)] = val / s;
    }
  return col;
}

namespace {

// Tensor Gauss-Legendre average over a full square cell.
double square_average(Vec2 c, double h, const std::function<double(Vec2)>& f) {
  const auto& gl = linalg::gauss_legendre(12);
  double acc = 0.0;
  for (size_t qx = 0; qx < gl.node.size(); ++qx)
    for (size_t qy = 0; qy < gl.node.size(); ++qy)
      acc += gl.weight[qx] * gl.weight[qy] *
             f({c.x + 0.5 * h * gl.node[qx], c.y + 0.5 * h * gl.node[qy]});
  return 0.25 * acc;
}

// ∫ f over a cut atom by the iterated Green reduction: the primitive
// F(x, y) = ∫_{x0}^{x} f(s, y) ds turns the area integral into ∮ F dy.
double green_integral(const Domain& dom, const CellAtom& at, const Grid& g,
                      const std::function<double(Vec2)>& f) {
  CellIndex ci = g.index(at.cell);
  const double x0 = g.center(ci.i, ci.j).x;
  const auto& gl = linalg::gauss_legendre(16);
  auto primitive = [&](double x, double y) {
    double acc = 0.0, mid = 0.5 * (x0 + x), half = 0.5 * (x - x0);
    for (size_t q = 0; q < gl.node.size(); ++q)
      acc += gl.weight[q] * f({mid + half * gl.node[q], y});
    return half * acc;
  };
  double total = 0.0;
  for (const Loop& lp : at.loops)
    for (const LoopEdge& e : lp.edges) {
      if (!e.on_curve()) {
        double dy = e.b.y - e.a.y;
        if (dy == 0.0) continue;
        for (size_t q = 0; q < gl.node.size(); ++q) {
          double s = 0.5 + 0.5 * gl.node[q];
          total += 0.5 * gl.weight[q] * dy *
                   primitive(e.a.x + s * (e.b.x - e.a.x), e.a.y + s * (e.b.y - e.a.y));
        }
      } else {
        const CurvePiece& cp = dom.curve(e.curve).piece(e.piece);
        double mid = 0.5 * (e.t0 + e.t1), half = 0.5 * (e.t1 - e.t0);
        for (size_t q = 0; q < gl.node.size(); ++q) {
          double t = mid + half * gl.node[q];
          Vec2 pt = cp.point(t), dv = cp.derivative(t);
          total += gl.weight[q] * half * dv.y * primitive(pt.x, pt.y);
        }
      }
    }
  return total;
}

}  // namespace

double cell_average(const Domain& dom, const CutCellSet& cells, int key,
                    const std::function<double(Vec2)>& f) {
  const Grid& g = cells.grid;
  const StoredCell* sc = cells.stored_geom(key);
  if (!sc) {
    if (cells.kind[key] != CellKind::pure)
      throw Error("cell_average: cell holds no control volume");
    CellIndex ci = g.index(key);
    return square_average(g.center(ci.i, ci.j), g.h, f);
  }
  double total = 0.0;
  for (const CellAtom& at : sc->atoms) {
    if (at.full_square) {
      CellIndex ci = g.index(at.cell);
      total += g.h * g.h * square_average(g.center(ci.i, ci.j), g.h, f);
    } else {
      total += green_integral(dom, at, g, f);
    }
  }
  return total / cells.volume[key];
}

double boundary_average(const Domain& dom, const CutCellSet& cells, int key,
                        const std::function<double(Vec2, Vec2)>& f) {
  const Grid& g = cells.grid;
  const StoredCell* sc = cells.stored_geom(key);
  if (!sc) throw Error("boundary_average: cell has no boundary segment");
  const double drop_len = 1e-13 * g.h;
  const auto& gl = linalg::gauss_legendre(16);
  double num = 0.0, den = 0.0;

  for (const CellAtom& at : sc->atoms)
    for (const Loop& lp : at.loops)
      for (const LoopEdge& e : lp.edges) {
        if (!e.on_curve() || (e.b - e.a).norm() < drop_len) continue;
        const CurvePiece& cp = dom.curve(e.curve).piece(e.piece);
        double mid = 0.5 * (e.t0 + e.t1), half = 0.5 * (e.t1 - e.t0);
        double sgn = half >= 0.0 ? 1.0 : -1.0;
        for (size_t q = 0; q < gl.node.size(); ++q) {
          double t = mid + half * gl.node[q];
          Vec2 pt = cp.point(t), dv = cp.derivative(t);
          double speed = dv.norm();
          double w = gl.weight[q] * std::abs(half) * speed;
          Vec2 n{sgn * dv.y / speed, -sgn * dv.x / speed};
          num += w * f(pt, n);
          den += w;
        }
      }

  CellIndex kc = g.index(key);
  for (const WallSeg& w : sc->walls) {
    SideFrame sf = side_segment(g, kc, w.side, w.u0, w.u1);
    double len = (sf.b - sf.a).norm();
    if (len < drop_len) continue;
    for (size_t q = 0; q < gl.node.size(); ++q) {
      double s = 0.5 + 0.5 * gl.node[q];
      Vec2 pt{sf.a.x + s * (sf.b.x - sf.a.x), sf.a.y + s * (sf.b.y - sf.a.y)};
      num += 0.5 * gl.weight[q] * len * f(pt, sf.normal);
      den += 0.5 * gl.weight[q] * len;
    }
  }

  if (den <= 0.0) throw Error("boundary_average: cell has no boundary segment");
  return num / den;
}

}  // namespace cutfv

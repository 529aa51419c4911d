#include "cutfv/cutcell.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "cutfv/linalg.hpp"

namespace cutfv {

namespace {

// One transversal crossing of a curve with a grid line.
struct Crossing {
  double u;      // curve parameter in piece units
  int axis;      // 0: vertical line x = const; 1: horizontal line y = const
  int line;      // line index along that axis
  double coord;  // the other coordinate of the crossing point
  int dir;       // +1 if the crossed coordinate is increasing along the curve
};

// Green's-theorem area term for one loop edge: integral of (x - x_ref) dy.
//
// Curve edges are handled with care so that a loop of near-machine area (a
// grazing sliver) still comes out with the right sign.  Two ingredients:
//  - the integral is split as (a.x - x_ref)*(b.y - a.y) plus the integral of
//    (x - a.x) dy, so endpoint roundoff multiplies the x-extent of the arc
//    instead of the cell width;
//  - the stored endpoints a/b may sit a hair off the polynomial path (root
//    tolerance, snapping onto grid lines), so straight bridge segments close
//    those gaps and keep the loop contour exactly closed.
double edge_area_term(const Domain& dom, const LoopEdge& e, double x_ref) {
  if (!e.on_curve()) return (0.5 * (e.a.x + e.b.x) - x_ref) * (e.b.y - e.a.y);
  const CurvePiece& pc = dom.curve(e.curve).piece(e.piece);
  const auto& gl = linalg::gauss_legendre(4);
  const double xa = e.a.x;
  double s = 0.0;
  for (size_t q = 0; q < gl.node.size(); ++q) {
    double t = 0.5 * ((e.t1 - e.t0) * gl.node[q] + (e.t0 + e.t1));
    s += gl.weight[q] * (pc.point(t).x - xa) * pc.derivative(t).y;
  }
  double area = (xa - x_ref) * (e.b.y - e.a.y) + 0.5 * (e.t1 - e.t0) * s;
  Vec2 pa = pc.point(e.t0);
  Vec2 pb = pc.point(e.t1);
  area += (0.5 * (e.a.x + pa.x) - xa) * (pa.y - e.a.y);
  area += (0.5 * (pb.x + e.b.x) - xa) * (e.b.y - pb.y);
  return area;
}

double loop_signed_area(const Domain& dom, const Loop& lp, double x_ref) {
  double a = 0.0;
  for (const LoopEdge& e : lp.edges) a += edge_area_term(dom, e, x_ref);
  return a;
}

// All crossing/chain/parity data for one (domain, grid) pair.
class Embedding {
 public:
  Embedding(const Domain& dom, const Grid& g) : dom_(dom), g_(g) {
    collect_crossings();
    build_chains();
    sweep_faces();
    sweep_centers();
  }

  struct HostedChain {
    ChainRef ref;
    Crossing in, out;  // entry and exit crossings
  };

  const Domain& dom_;
  Grid g_;
  std::vector<std::vector<Crossing>> cross_;  // per curve, sorted by u
  std::vector<int> free_loop_cell_;           // host cell, or -1 if curve crosses lines
  std::unordered_map<int, std::vector<HostedChain>> cell_chains_;
  std::vector<double> xface_len_, yface_len_;
  std::unordered_map<std::int64_t, std::vector<FaceSeg>> cut_face_segs_;
  std::vector<char> center_fluid_;            // per cell: center lies in the domain

  static std::int64_t fkey(int axis, int id) {
    return (static_cast<std::int64_t>(axis) << 32) | static_cast<std::uint32_t>(id);
  }
  int xface_id(int i, int j) const { return j * (g_.nx + 1) + i; }
  int yface_id(int i, int j) const { return j * g_.nx + i; }

 private:
  void collect_crossings() {
    const double h = g_.h;
    cross_.resize(dom_.curve_count());
    free_loop_cell_.assign(dom_.curve_count(), -1);
    for (int c = 0; c < dom_.curve_count(); ++c) {
      const Curve& cv = dom_.curve(c);
      auto& out = cross_[c];
      for (int k = 0; k < cv.piece_count(); ++k) {
        const CurvePiece& pc = cv.piece(k);
        const BBox& bb = cv.piece_bbox(k);
        for (int axis = 0; axis < 2; ++axis) {
          double lo = axis == 0 ? bb.xmin : bb.ymin;
          double hi = axis == 0 ? bb.xmax : bb.ymax;
          double org = axis == 0 ? g_.x0 : g_.y0;
          int nlines = (axis == 0 ? g_.nx : g_.ny) + 1;
          int l0 = static_cast<int>(std::ceil((lo - org) / h - 1e-12));
          int l1 = static_cast<int>(std::floor((hi - org) / h + 1e-12));
          for (int l = std::max(l0, 0); l <= std::min(l1, nlines - 1); ++l) {
            double target = org + l * h;
            auto roots = poly_roots_01(axis == 0 ? pc.cx : pc.cy, pc.deg, target);
            for (double t : roots) {
              if (t >= 1.0 - 1e-13) continue;  // owned by the successor piece
              Vec2 d = pc.derivative(t);
              double dv = axis == 0 ? d.x : d.y;
              if (dv == 0.0) throw TangencyError("non-transversal grid crossing");
              Vec2 p = pc.point(t);
              double other = axis == 0 ? p.y : p.x;
              double fo = (other - (axis == 0 ? g_.y0 : g_.x0)) / h;
              if (std::abs(fo - std::round(fo)) < 1e-11)
                throw TangencyError("curve crosses a grid corner");
              out.push_back({k + t, axis, l, other, dv > 0 ? +1 : -1});
            }
          }
        }
      }
      std::sort(out.begin(), out.end(),
                [](const Crossing& a, const Crossing& b) { return a.u < b.u; });
      out.erase(std::unique(out.begin(), out.end(),
                            [](const Crossing& a, const Crossing& b) {
                              return std::abs(a.u - b.u) < 1e-12;
                            }),
                out.end());
      if (out.empty()) {
        // The whole curve lies inside one cell.
        Vec2 p = cv.point_at(0.0);
        int ci = static_cast<int>(std::floor((p.x - g_.x0) / h));
        int cj = static_cast<int>(std::floor((p.y - g_.y0) / h));
        if (ci < 0 || cj < 0 || ci >= g_.nx || cj >= g_.ny)
          throw GeometryError("free boundary loop outside the grid");
        free_loop_cell_[c] = g_.id(ci, cj);
      }
    }
  }

  int host_cell(const Crossing& cr) const {
    int a, b;
    if (cr.axis == 0) {
      a = cr.dir > 0 ? cr.line : cr.line - 1;
      b = static_cast<int>(std::floor((cr.coord - g_.y0) / g_.h));
    } else {
      a = static_cast<int>(std::floor((cr.coord - g_.x0) / g_.h));
      b = cr.dir > 0 ? cr.line : cr.line - 1;
    }
    if (a < 0 || b < 0 || a >= g_.nx || b >= g_.ny)
      throw GeometryError("boundary curve leaves the grid");
    return g_.id(a, b);
  }

  void build_chains() {
    for (int c = 0; c < dom_.curve_count(); ++c) {
      const auto& xs = cross_[c];
      const int m = static_cast<int>(xs.size());
      const int n = dom_.curve(c).piece_count();
      for (int k = 0; k < m; ++k) {
        const Crossing& in = xs[k];
        const Crossing& out = xs[(k + 1) % m];
        double u1 = (k + 1 < m) ? out.u : out.u + n;
        cell_chains_[host_cell(in)].push_back({{c, in.u, u1}, in, out});
      }
    }
  }

  // Fluid status along grid lines, anchored by one domain query per line and
  // alternated across crossings.
  void sweep_faces() {
    xface_len_.assign(static_cast<size_t>(g_.nx + 1) * g_.ny, 0.0);
    yface_len_.assign(static_cast<size_t>(g_.nx) * (g_.ny + 1), 0.0);
    const double h = g_.h;
    for (int axis = 0; axis < 2; ++axis) {
      int nlines = (axis == 0 ? g_.nx : g_.ny) + 1;
      int nfaces = axis == 0 ? g_.ny : g_.nx;
      double line_org = axis == 0 ? g_.x0 : g_.y0;
      double along_org = axis == 0 ? g_.y0 : g_.x0;
      for (int l = 0; l < nlines; ++l) {
        std::vector<double> pts;
        for (int c = 0; c < dom_.curve_count(); ++c)
          for (const Crossing& cr : cross_[c])
            if (cr.axis == axis && cr.line == l) pts.push_back(cr.coord);
        std::sort(pts.begin(), pts.end());

        double lc = line_org + l * h;
        // Nudge rim lines inward so the strict box test sees the inside.
        if (l == 0) lc += 1e-9 * h;
        if (l == nlines - 1) lc -= 1e-9 * h;
        double along_end = along_org + nfaces * h;
        double first = pts.empty() ? along_end : pts.front();
        Vec2 probe = axis == 0 ? Vec2{lc, 0.5 * (along_org + first)}
                               : Vec2{0.5 * (along_org + first), lc};
        bool fluid = dom_.contains(probe);

        size_t next = 0;
        for (int f = 0; f < nfaces; ++f) {
          double a = along_org + f * h, b = a + h;
          double cur = a;
          double len = 0.0;
          std::vector<FaceSeg> segs;
          while (next < pts.size() && pts[next] < b) {
            if (fluid && pts[next] > cur) {
              segs.push_back({cur, pts[next]});
              len += pts[next] - cur;
            }
            cur = pts[next];
            fluid = !fluid;
            ++next;
          }
          if (fluid && b > cur) {
            segs.push_back({cur, b});
            len += b - cur;
          }
          int id = axis == 0 ? xface_id(l, f) : yface_id(f, l);
          (axis == 0 ? xface_len_ : yface_len_)[id] = len;
          if (len > 0.0 && len < h * (1.0 - 1e-14)) cut_face_segs_[fkey(axis, id)] = segs;
        }
      }
    }
  }

  // Cell-center classification: parity along each row's center line.
  void sweep_centers() {
    center_fluid_.assign(g_.cell_count(), 0);
    const double h = g_.h;
    for (int j = 0; j < g_.ny; ++j) {
      double yc = g_.y0 + (j + 0.5) * h;
      std::vector<double> pts;
      for (int c = 0; c < dom_.curve_count(); ++c) {
        const Curve& cv = dom_.curve(c);
        for (int k = 0; k < cv.piece_count(); ++k) {
          const BBox& bb = cv.piece_bbox(k);
          if (bb.ymin > yc || bb.ymax < yc) continue;
          for (double t : poly_roots_01(cv.piece(k).cy, cv.piece(k).deg, yc)) {
            if (t >= 1.0 - 1e-13) continue;
            pts.push_back(cv.piece(k).point(t).x);
          }
        }
      }
      std::sort(pts.begin(), pts.end());
      double first = pts.empty() ? g_.x0 + g_.nx * h : pts.front();
      bool fluid = dom_.contains({0.5 * (g_.x0 + first), yc});
      size_t next = 0;
      for (int i = 0; i < g_.nx; ++i) {
        double xc = g_.x0 + (i + 0.5) * h;
        while (next < pts.size() && pts[next] < xc) {
          fluid = !fluid;
          ++next;
        }
        center_fluid_[g_.id(i, j)] = fluid ? 1 : 0;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Per-cell loop tracing
// ---------------------------------------------------------------------------

struct CellFrame {
  double xl, xr, yb, yt, h;
  // Perimeter coordinate, counterclockwise from the SW corner:
  // [0,h): S left->right, [h,2h): E bottom->top, [2h,3h): N right->left,
  // [3h,4h): W top->bottom.
  double sigma_of(const Crossing& cr, int i, int j) const {
    if (cr.axis == 0) {
      if (cr.line == i) return 3 * h + (yt - cr.coord);  // W face
      return h + (cr.coord - yb);                        // E face
    }
    if (cr.line == j) return cr.coord - xl;              // S face
    return 2 * h + (xr - cr.coord);                      // N face
  }
  Vec2 point_at_sigma(double s) const {
    s = std::fmod(s, 4 * h);
    if (s < 0) s += 4 * h;
    if (s < h) return {xl + s, yb};
    if (s < 2 * h) return {xr, yb + (s - h)};
    if (s < 3 * h) return {xr - (s - 2 * h), yt};
    return {xl, yt - (s - 3 * h)};
  }
  int face_of(double s) const {  // face code of the span containing sigma s
    int q = static_cast<int>(std::floor(std::fmod(s, 4 * h) / h)) % 4;
    static const int code[4] = {2, 1, 3, 0};  // S, E, N, W
    return code[q];
  }
};

// Appends the counterclockwise perimeter walk from (sa, pa) to (sb, pb),
// splitting at cell corners.
void emit_perimeter(const CellFrame& fr, double sa, Vec2 pa, double sb, Vec2 pb,
                    std::vector<LoopEdge>& out) {
  double end = sb;
  while (end <= sa + 1e-13 * fr.h) end += 4 * fr.h;
  double cur = sa;
  Vec2 curp = pa;
  while (true) {
    double corner = (std::floor(cur / fr.h + 1e-12) + 1) * fr.h;
    if (corner >= end - 1e-13 * fr.h) break;
    Vec2 cp = fr.point_at_sigma(corner);
    LoopEdge e;
    e.a = curp;
    e.b = cp;
    e.face = fr.face_of(cur);
    out.push_back(e);
    cur = corner;
    curp = cp;
  }
  LoopEdge e;
  e.a = curp;
  e.b = pb;
  e.face = fr.face_of(cur + 1e-12 * fr.h);
  out.push_back(e);
}

// Appends the curve run u0 -> u1 (piece units, u1 may exceed the piece count)
// as per-piece polynomial edges, with endpoints pinned to the crossing points.
void emit_chain(const Curve& cv, int curve_id, double u0, double u1, Vec2 p_in,
                Vec2 p_out, std::vector<LoopEdge>& out) {
  const int n = cv.piece_count();
  Vec2 prev = p_in;
  int m = static_cast<int>(std::floor(u0));
  while (static_cast<double>(m) < u1) {
    double t0 = std::max(u0 - m, 0.0);
    double t1 = std::min(u1 - m, 1.0);
    if (t1 - t0 < 1e-15) {
      ++m;
      continue;
    }
    int piece = ((m % n) + n) % n;
    bool last = (u1 <= m + 1.0 + 1e-15);
    Vec2 b = last ? p_out : cv.piece(piece).point(1.0);
    LoopEdge e;
    e.curve = curve_id;
    e.piece = piece;
    e.t0 = t0;
    e.t1 = t1;
    e.a = prev;
    e.b = b;
    out.push_back(e);
    prev = b;
    ++m;
  }
}

std::array<std::vector<FaceSeg>, 4> face_segs_of_loops(const std::vector<Loop>& loops) {
  std::array<std::vector<FaceSeg>, 4> segs;
  for (const Loop& lp : loops)
    for (const LoopEdge& e : lp.edges) {
      if (e.face < 0) continue;
      double u0, u1;
      if (e.face == 0 || e.face == 1) {  // W/E faces run along y
        u0 = std::min(e.a.y, e.b.y);
        u1 = std::max(e.a.y, e.b.y);
      } else {
        u0 = std::min(e.a.x, e.b.x);
        u1 = std::max(e.a.x, e.b.x);
      }
      if (u1 > u0) segs[e.face].push_back({u0, u1});
    }
  for (auto& v : segs)
    std::sort(v.begin(), v.end(),
              [](const FaceSeg& a, const FaceSeg& b) { return a.u0 < b.u0; });
  return segs;
}

CellAtom make_full_square_atom(const Grid& g, int i, int j) {
  CellAtom at;
  at.cell = g.id(i, j);
  at.full_square = true;
  at.volume = g.h * g.h;
  double xl = g.x0 + i * g.h, xr = xl + g.h;
  double yb = g.y0 + j * g.h, yt = yb + g.h;
  Loop lp;
  auto add = [&lp](Vec2 a, Vec2 b, int face) {
    LoopEdge e;
    e.a = a;
    e.b = b;
    e.face = face;
    lp.edges.push_back(e);
  };
  add({xl, yb}, {xr, yb}, 2);
  add({xr, yb}, {xr, yt}, 1);
  add({xr, yt}, {xl, yt}, 3);
  add({xl, yt}, {xl, yb}, 0);
  lp.signed_area = g.h * g.h;
  at.loops.push_back(std::move(lp));
  at.face_segs = face_segs_of_loops(at.loops);
  return at;
}

// Traces the fluid components of one cell from its hosted chains and free
// loops.  background_fluid gives the state of the cell outside all free
// loops; it is only consulted when the cell has no chains.
std::vector<CellAtom> trace_cell(const Domain& dom, const Grid& g, int i, int j,
                                 const std::vector<Embedding::HostedChain>& chains,
                                 const std::vector<int>& free_loops,
                                 bool background_fluid) {
  const double h = g.h;
  CellFrame fr{g.x0 + i * h, g.x0 + (i + 1) * h, g.y0 + j * h, g.y0 + (j + 1) * h, h};
  std::vector<CellAtom> atoms;

  if (!chains.empty()) {
    struct Event {
      double sigma;
      int chain;
      bool entry;
    };
    std::vector<Event> events;
    std::vector<double> sig_in(chains.size()), sig_out(chains.size());
    std::vector<Vec2> p_in(chains.size()), p_out(chains.size());
    for (size_t c = 0; c < chains.size(); ++c) {
      const auto& hc = chains[c];
      sig_in[c] = fr.sigma_of(hc.in, i, j);
      sig_out[c] = fr.sigma_of(hc.out, i, j);
      const Curve& cv = dom.curve(hc.ref.curve);
      auto point_of_u = [&cv](double u) {
        int n = cv.piece_count();
        int m = static_cast<int>(std::floor(u));
        return cv.piece(((m % n) + n) % n).point(u - m);
      };
      // Snap the crossed coordinate exactly onto its grid line so the face
      // edges that start or end here are exactly axis-aligned.
      auto snap = [&g](Vec2 p, const Crossing& cr) {
        if (cr.axis == 0)
          p.x = g.x0 + cr.line * g.h;
        else
          p.y = g.y0 + cr.line * g.h;
        return p;
      };
      p_in[c] = snap(point_of_u(hc.ref.u0), hc.in);
      p_out[c] = snap(point_of_u(hc.ref.u1), hc.out);
      events.push_back({sig_in[c], static_cast<int>(c), true});
      events.push_back({sig_out[c], static_cast<int>(c), false});
    }
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.sigma < b.sigma; });

    auto next_event_after = [&](double s) -> const Event& {
      for (const Event& e : events)
        if (e.sigma > s + 1e-13 * h) return e;
      return events.front();  // cyclic wrap
    };

    std::vector<char> used(chains.size(), 0);
    for (size_t c0 = 0; c0 < chains.size(); ++c0) {
      if (used[c0]) continue;
      Loop lp;
      std::vector<ChainRef> consumed;
      size_t cur = c0;
      size_t guard = 0;
      do {
        if (++guard > 2 * chains.size() + 8)
          throw GeometryError("cut-cell boundary tracing did not close");
        used[cur] = 1;
        const auto& hc = chains[cur];
        consumed.push_back(hc.ref);
        emit_chain(dom.curve(hc.ref.curve), hc.ref.curve, hc.ref.u0, hc.ref.u1,
                   p_in[cur], p_out[cur], lp.edges);
        const Event& nx = next_event_after(sig_out[cur]);
        if (!nx.entry)
          throw GeometryError("cut-cell boundary tracing hit an exit point");
        emit_perimeter(fr, sig_out[cur], p_out[cur], sig_in[nx.chain],
                       p_in[nx.chain], lp.edges);
        cur = static_cast<size_t>(nx.chain);
      } while (cur != c0);
      lp.signed_area = loop_signed_area(dom, lp, fr.xl);
      if (lp.signed_area <= 0.0)
        throw GeometryError("traced cut-cell loop is not counterclockwise");
      CellAtom at;
      at.cell = g.id(i, j);
      at.loops.push_back(std::move(lp));
      at.chains = std::move(consumed);
      atoms.push_back(std::move(at));
    }
  } else if (background_fluid) {
    atoms.push_back(make_full_square_atom(g, i, j));
  }

  // Free loops: whole curves contained in this cell.
  for (int c : free_loops) {
    const Curve& cv = dom.curve(c);
    Loop lp;
    Vec2 start = cv.piece(0).point(0.0);
    Vec2 prev = start;
    for (int k = 0; k < cv.piece_count(); ++k) {
      Vec2 b = (k + 1 == cv.piece_count()) ? start : cv.piece(k + 1).point(0.0);
      LoopEdge e;
      e.curve = c;
      e.piece = k;
      e.t0 = 0.0;
      e.t1 = 1.0;
      e.a = prev;
      e.b = b;
      lp.edges.push_back(e);
      prev = b;
    }
    lp.signed_area = loop_signed_area(dom, lp, fr.xl);
    double n = cv.piece_count();
    if (lp.signed_area > 0.0) {
      // Fluid island: a component of its own.
      CellAtom at;
      at.cell = g.id(i, j);
      at.loops.push_back(std::move(lp));
      at.chains.push_back({c, 0.0, n});
      atoms.push_back(std::move(at));
    } else {
      // Solid island: a hole of the component that contains it.
      Vec2 probe = cv.point_at(0.0);
      bool placed = false;
      for (CellAtom& at : atoms) {
        if (at.loops.empty()) continue;
        const Loop& outer = at.loops.front();
        double wind = 0.0;
        for (const LoopEdge& e : outer.edges) {
          Vec2 a = e.a - probe, b = e.b - probe;
          wind += std::atan2(a.cross(b), a.dot(b));
        }
        if (std::abs(wind) > M_PI) {
          at.loops.push_back(std::move(lp));
          at.chains.push_back({c, 0.0, n});
          at.full_square = false;
          placed = true;
          break;
        }
      }
      if (!placed) throw GeometryError("boundary hole without an enclosing component");
    }
  }

  for (CellAtom& at : atoms) {
    at.volume = 0.0;
    for (const Loop& lp : at.loops) at.volume += lp.signed_area;
    at.face_segs = face_segs_of_loops(at.loops);
  }
  return atoms;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

std::vector<CellAtom> clip_cell(const Domain& dom, const Grid& grid, int i, int j) {
  Embedding emb(dom, grid);
  int id = grid.id(i, j);
  std::vector<Embedding::HostedChain> chains;
  if (auto it = emb.cell_chains_.find(id); it != emb.cell_chains_.end())
    chains = it->second;
  std::vector<int> free_loops;
  for (int c = 0; c < dom.curve_count(); ++c)
    if (emb.free_loop_cell_[c] == id) free_loops.push_back(c);
  // The ambient state outside any free loop shows on the cell's south face,
  // which free loops cannot reach (they cross no grid line).
  bool background = free_loops.empty()
                        ? emb.center_fluid_[id] != 0
                        : emb.yface_len_[emb.yface_id(i, j)] > 0.5 * grid.h;
  return trace_cell(dom, grid, i, j, chains, free_loops, background);
}

CutCellSet generate_cut_cells(const Domain& dom, double h, double theta) {
  if (!(theta > 0.0 && theta < 1.0))
    throw UnsupportedGeometry("theta must lie in (0, 1)");
  const BoxSpec& box = dom.box();
  double fx = box.width() / h, fy = box.height() / h;
  int nx = static_cast<int>(std::round(fx)), ny = static_cast<int>(std::round(fy));
  if (nx < 1 || ny < 1 || std::abs(fx - nx) > 1e-9 || std::abs(fy - ny) > 1e-9)
    throw UnsupportedGeometry("h must divide the box dimensions evenly");

  CutCellSet set;
  set.grid = Grid{box.x0, box.y0, h, nx, ny};
  set.theta = theta;
  const Grid& g = set.grid;
  const double h2 = h * h;

  Embedding emb(dom, g);

  set.kind.assign(g.cell_count(), CellKind::empty);
  set.volume.assign(g.cell_count(), 0.0);
  set.merge_target.assign(g.cell_count(), -1);
  std::vector<double> own_volume(g.cell_count(), 0.0);

  for (int id = 0; id < g.cell_count(); ++id) {
    if (emb.center_fluid_[id]) {
      set.kind[id] = CellKind::pure;
      set.volume[id] = h2;
      own_volume[id] = h2;
    }
  }

  std::unordered_map<int, std::vector<int>> cell_free_loops;
  for (int c = 0; c < dom.curve_count(); ++c)
    if (emb.free_loop_cell_[c] >= 0)
      cell_free_loops[emb.free_loop_cell_[c]].push_back(c);

  std::vector<int> cut_ids;
  for (const auto& [id, chains] : emb.cell_chains_) cut_ids.push_back(id);
  for (const auto& [id, fl] : cell_free_loops)
    if (!emb.cell_chains_.count(id)) cut_ids.push_back(id);
  std::sort(cut_ids.begin(), cut_ids.end());

  for (int id : cut_ids) {
    auto ci = g.index(id);
    std::vector<Embedding::HostedChain> chains;
    if (auto it = emb.cell_chains_.find(id); it != emb.cell_chains_.end())
      chains = it->second;
    std::vector<int> fl;
    if (auto it = cell_free_loops.find(id); it != cell_free_loops.end()) fl = it->second;
    bool background = fl.empty()
                          ? emb.center_fluid_[id] != 0
                          : emb.yface_len_[emb.yface_id(ci.i, ci.j)] > 0.5 * h;
    auto atoms = trace_cell(dom, g, ci.i, ci.j, chains, fl, background);
    double v = 0.0;
    for (const auto& a : atoms) v += a.volume;
    set.kind[id] = atoms.empty() ? CellKind::empty : CellKind::interface;
    own_volume[id] = v;
    set.volume[id] = v;
    if (!atoms.empty()) {
      StoredCell sc;
      sc.volume = v;
      for (auto& a : atoms) sc.has_chains = sc.has_chains || !a.chains.empty();
      sc.atoms = std::move(atoms);
      // Largest component first (it is the one the cell keeps).
      std::stable_sort(sc.atoms.begin(), sc.atoms.end(),
                       [](const CellAtom& a, const CellAtom& b) {
                         return a.volume > b.volume;
                       });
      set.geom.emplace(id, std::move(sc));
    }
  }

  // Ensures a stored entry exists; pure cells get their implicit square atom.
  auto materialize = [&](int key) -> StoredCell& {
    auto [it, fresh] = set.geom.try_emplace(key);
    StoredCell& sc = it->second;
    if (fresh) sc.volume = set.volume[key];
    if (sc.atoms.empty() && set.kind[key] == CellKind::pure) {
      auto ci = g.index(key);
      sc.atoms.push_back(make_full_square_atom(g, ci.i, ci.j));
    }
    return sc;
  };

  // Wall portions of S_i for rim cells.
  auto add_wall = [&](int id, int side, double u0, double u1) {
    if (u1 - u0 <= 1e-13 * h) return;
    materialize(id).walls.push_back({side, u0, u1});
  };
  for (int j = 0; j < g.ny; ++j)
    for (int pass = 0; pass < 2; ++pass) {
      int line = pass == 0 ? 0 : g.nx;
      int cell = pass == 0 ? g.id(0, j) : g.id(g.nx - 1, j);
      if (set.kind[cell] == CellKind::empty) continue;
      int fid = emb.xface_id(line, j);
      if (auto it = emb.cut_face_segs_.find(Embedding::fkey(0, fid));
          it != emb.cut_face_segs_.end()) {
        for (const FaceSeg& s : it->second) add_wall(cell, pass == 0 ? 0 : 1, s.u0, s.u1);
      } else if (emb.xface_len_[fid] > 0.0) {
        add_wall(cell, pass == 0 ? 0 : 1, g.y0 + j * h, g.y0 + (j + 1) * h);
      }
    }
  for (int i = 0; i < g.nx; ++i)
    for (int pass = 0; pass < 2; ++pass) {
      int line = pass == 0 ? 0 : g.ny;
      int cell = pass == 0 ? g.id(i, 0) : g.id(i, g.ny - 1);
      if (set.kind[cell] == CellKind::empty) continue;
      int fid = emb.yface_id(i, line);
      if (auto it = emb.cut_face_segs_.find(Embedding::fkey(1, fid));
          it != emb.cut_face_segs_.end()) {
        for (const FaceSeg& s : it->second) add_wall(cell, pass == 0 ? 2 : 3, s.u0, s.u1);
      } else if (emb.yface_len_[fid] > 0.0) {
        add_wall(cell, pass == 0 ? 2 : 3, g.x0 + i * h, g.x0 + (i + 1) * h);
      }
    }

  // Shared fluid-face length between two atoms; side points from a toward b.
  auto atoms_shared = [](const CellAtom& a, const CellAtom& b, int side) {
    static const int opposite[4] = {1, 0, 3, 2};
    double s = 0.0;
    for (const FaceSeg& x : a.face_segs[side])
      for (const FaceSeg& y : b.face_segs[opposite[side]])
        s += std::max(0.0, std::min(x.u1, y.u1) - std::max(x.u0, y.u0));
    return s;
  };
  auto adjacent_side = [&](int ida, int idb) -> int {
    auto ca = g.index(ida), cb = g.index(idb);
    if (ca.j == cb.j && cb.i == ca.i - 1) return 0;
    if (ca.j == cb.j && cb.i == ca.i + 1) return 1;
    if (ca.i == cb.i && cb.j == ca.j - 1) return 2;
    if (ca.i == cb.i && cb.j == ca.j + 1) return 3;
    return -1;
  };
  // Constituent atoms of a stored key, falling back to the implicit square.
  auto collect_atoms = [&](int key, CellAtom& tmp, std::vector<const CellAtom*>& out) {
    const StoredCell* sc = set.stored_geom(key);
    if (sc && !sc->atoms.empty()) {
      for (const auto& a : sc->atoms) out.push_back(&a);
    } else {
      auto ci = g.index(key);
      tmp = make_full_square_atom(g, ci.i, ci.j);
      out.push_back(&tmp);
    }
  };
  auto stored_shared = [&](int keya, int keyb) {
    CellAtom ta, tb;
    std::vector<const CellAtom*> av, bv;
    collect_atoms(keya, ta, av);
    collect_atoms(keyb, tb, bv);
    double s = 0.0;
    for (const CellAtom* pa : av)
      for (const CellAtom* pb : bv) {
        int side = adjacent_side(pa->cell, pb->cell);
        if (side >= 0) s += atoms_shared(*pa, *pb, side);
      }
    return s;
  };

  std::unordered_map<int, std::vector<int>> absorbed;
  auto do_merge = [&](int key, int target) {
    StoredCell& src = materialize(key);
    StoredCell& dst = materialize(target);
    for (auto& a : src.atoms) dst.atoms.push_back(std::move(a));
    for (auto& w : src.walls) dst.walls.push_back(w);
    dst.volume += src.volume;
    dst.has_chains = dst.has_chains || src.has_chains;
    set.geom.erase(key);
    set.kind[target] = CellKind::interface;
    set.volume[target] = dst.volume;
    set.merge_target[key] = target;
    set.volume[key] = own_volume[key];
    auto& lst = absorbed[target];
    lst.push_back(key);
    if (auto it = absorbed.find(key); it != absorbed.end()) {
      for (int c : it->second) {
        set.merge_target[c] = target;
        lst.push_back(c);
      }
      absorbed.erase(it);
    }
  };

  static const int di[4] = {-1, 1, 0, 0};
  static const int dj[4] = {0, 0, -1, 1};

  // Algorithm step one: a multi-component cell keeps its largest component;
  // every other component joins its largest neighboring cell (volume ties go
  // to the smallest cell id).
  std::vector<int> multi;
  for (auto& [id, sc] : set.geom)
    if (sc.atoms.size() > 1) multi.push_back(id);
  std::sort(multi.begin(), multi.end());
  for (int id : multi) {
    StoredCell& sc = set.geom.at(id);
    std::vector<CellAtom> extra(std::make_move_iterator(sc.atoms.begin() + 1),
                                std::make_move_iterator(sc.atoms.end()));
    sc.atoms.resize(1);
    sc.volume = sc.atoms[0].volume;
    sc.has_chains = !sc.atoms[0].chains.empty();
    set.volume[id] = sc.volume;
    auto ci = g.index(id);
    for (CellAtom& atom : extra) {
      int best = -1;
      double best_vol = -1.0;
      for (int d = 0; d < 4; ++d) {
        int ni = ci.i + di[d], nj = ci.j + dj[d];
        if (ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ny) continue;
        int nid = set.resolve(g.id(ni, nj));
        if (nid == id || set.kind[nid] == CellKind::empty) continue;
        CellAtom tmp;
        std::vector<const CellAtom*> nv;
        collect_atoms(nid, tmp, nv);
        double share = 0.0;
        for (const CellAtom* pn : nv) {
          int s = adjacent_side(atom.cell, pn->cell);
          if (s >= 0) share += atoms_shared(atom, *pn, s);
        }
        if (share <= 0.0) continue;
        double nvol = set.volume[nid];
        if (best < 0 || nvol > best_vol * (1.0 + 1e-12)) {
          best = nid;
          best_vol = nvol;
        } else if (nvol >= best_vol * (1.0 - 1e-12) && nid < best) {
          best = nid;  // volumes tie: smallest cell id wins
        }
      }
      if (best < 0) throw MergeFailure("cut-cell component has no neighbor to join");
      StoredCell& dst = materialize(best);
      dst.volume += atom.volume;
      dst.has_chains = dst.has_chains || !atom.chains.empty();
      dst.atoms.push_back(std::move(atom));
      set.volume[best] = dst.volume;
      set.kind[best] = CellKind::interface;
    }
  }

  // Algorithm step two: absorb small cells into the neighbor sharing the
  // largest cut face, iterating until every stored volume exceeds theta h^2.
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> keys;
    for (int id = 0; id < g.cell_count(); ++id)
      if (set.kind[id] == CellKind::interface && set.merge_target[id] < 0)
        keys.push_back(id);
    for (int key : keys) {
      if (set.merge_target[key] >= 0) continue;
      const StoredCell* sc = set.stored_geom(key);
      if (!sc || sc->volume > theta * h2 * (1.0 + 1e-12)) continue;
      std::vector<int> cand;
      for (const CellAtom& a : sc->atoms) {
        auto ci = g.index(a.cell);
        for (int d = 0; d < 4; ++d) {
          int ni = ci.i + di[d], nj = ci.j + dj[d];
          if (ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ny) continue;
          int nid = set.resolve(g.id(ni, nj));
          if (nid == key || set.kind[nid] == CellKind::empty) continue;
          cand.push_back(nid);
        }
      }
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      int best = -1;
      double best_share = 0.0;
      // Candidates are visited in ascending id order and a later one must
      // strictly beat the running best, so share ties go to the smallest id.
      for (int nid : cand) {
        double share = stored_shared(key, nid);
        if (share > best_share * (1.0 + 1e-12) + 1e-300) {
          best = nid;
          best_share = share;
        }
      }
      if (best < 0)
        throw MergeFailure("small cut cell has no neighbor with a shared face");
      do_merge(key, best);
      changed = true;
    }
  }

  for (int id = 0; id < g.cell_count(); ++id)
    if (set.kind[id] != CellKind::empty && set.merge_target[id] < 0)
      set.stored.push_back(id);

  set.xface_len = std::move(emb.xface_len_);
  set.yface_len = std::move(emb.yface_len_);
  return set;
}

Classification classify_cells(const CutCellSet& cells) {
  const Grid& g = cells.grid;
  Classification cl;
  cl.regular.assign(g.cell_count(), 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int id = g.id(i, j);
      if (cells.kind[id] == CellKind::empty) continue;
      bool reg = true;
      for (int m = -2; m <= 2 && reg; ++m)
        if (!cells.is_pure(i + m, j) || !cells.is_pure(i, j + m)) reg = false;
      for (int m1 = -2; m1 <= 2 && reg; ++m1) {
        if (m1 == 0) continue;
        for (int m2 = -2; m2 <= 2 && reg; ++m2) {
          if (m2 == 0) continue;
          if (!cells.is_pure(i + m1, j + m2)) reg = false;
        }
      }
      cl.regular[id] = reg ? 1 : 0;
    }
  for (int id : cells.stored) {
    if (cl.regular[id])
      ++cl.n_regular;
    else
      ++cl.n_irregular;
    if (cells.kind[id] == CellKind::interface) cl.interface_cells.push_back(id);
  }
  return cl;
}

void dump_cells_csv(const CutCellSet& cells, std::ostream& out) {
  const Grid& g = cells.grid;
  out << "i,j,kind,volume,merge_target\n";
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int id = g.id(i, j);
      const char* kind = cells.kind[id] == CellKind::empty  ? "empty"
                         : cells.kind[id] == CellKind::pure ? "pure"
                                                            : "interface";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", cells.volume[id]);
      out << i << ',' << j << ',' << kind << ',' << buf << ',';
      if (cells.merge_target[id] >= 0) {
        auto t = g.index(cells.merge_target[id]);
        out << t.i << ':' << t.j;
      }
      out << '\n';
    }
}

}  // namespace cutfv

#include "cutfv/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace cutfv {

namespace {

// Boundary component of a stored cell's own S_i: -1 none, 0 rectangle walls,
// 1 + k for curve k.  Chains win over walls (no cell carries both in the
// domains this solver targets; if one ever does, the curve identity is the
// stronger geometric anchor for ordering purposes).
int boundary_component(const CutCellSet& cells, int key) {
  const StoredCell* sc = cells.stored_geom(key);
  if (!sc) return -1;
  for (const CellAtom& at : sc->atoms)
    if (!at.chains.empty()) return 1 + at.chains.front().curve;
  if (!sc->walls.empty()) return 0;
  return -1;
}

// Parameter in [0, 1) of the rectangle-perimeter point nearest to p,
// measured counterclockwise from (x0, y0): bottom, right, top, left.
double wall_parameter(const BoxSpec& b, Vec2 p) {
  double w = b.x1 - b.x0, h = b.y1 - b.y0;
  double d[4] = {p.y - b.y0, b.x1 - p.x, b.y1 - p.y, p.x - b.x0};
  int side = 0;
  for (int s = 1; s < 4; ++s)
    if (d[s] < d[side]) side = s;
  double along;
  switch (side) {
    case 0: along = std::clamp(p.x - b.x0, 0.0, w); break;
    case 1: along = w + std::clamp(p.y - b.y0, 0.0, h); break;
    case 2: along = w + h + std::clamp(b.x1 - p.x, 0.0, w); break;
    default: along = 2 * w + h + std::clamp(b.y1 - p.y, 0.0, h); break;
  }
  double per = 2.0 * (w + h);
  double s = along / per;
  return s >= 1.0 ? 0.0 : s;
}

}  // namespace

IrregularOrdering order_irregular(const Domain& dom, const CutCellSet& cells,
                                  const Classification& cl) {
  const Grid& g = cells.grid;
  IrregularOrdering ord;

  std::vector<int> irregular;
  for (int key : cells.stored)
    if (!cl.regular[key]) irregular.push_back(key);

  // Interface cells per component, each tagged with its boundary parameter.
  const int n_comp = 1 + dom.curve_count();
  std::vector<std::vector<std::pair<double, int>>> groups(n_comp);
  for (int key : irregular) {
    int comp = boundary_component(cells, key);
    if (comp < 0) continue;
    CellIndex c = g.index(key);
    Vec2 r = g.center(c.i, c.j);
    double s = comp == 0 ? wall_parameter(dom.box(), r)
                         : dom.curve(comp - 1).nearest_parameter(r);
    groups[comp].push_back({s, key});
    ord.s_value.emplace(key, s);
  }
  for (auto& grp : groups) std::sort(grp.begin(), grp.end());

  std::unordered_map<int, char> numbered;
  numbered.reserve(irregular.size());
  ord.order.reserve(irregular.size());

  // Alg.-3 sweep: each interface cell, in boundary order, numbers every
  // not-yet-numbered irregular cell within L-infinity index distance 2.
  // Rings are walked inside out; within a ring, (j, i) lexicographic.
  auto sweep_from = [&](int center_key) {
    CellIndex c = g.index(center_key);
    for (int ring = 0; ring <= 2; ++ring)
      for (int dj = -ring; dj <= ring; ++dj)
        for (int di = -ring; di <= ring; ++di) {
          if (std::max(std::abs(di), std::abs(dj)) != ring) continue;
          int ii = c.i + di, jj = c.j + dj;
          if (!g.contains(ii, jj)) continue;
          int id = g.id(ii, jj);
          if (cells.kind[id] == CellKind::empty) continue;
          int key = cells.resolve(id);
          if (cl.regular[key] || numbered.count(key)) continue;
          numbered.emplace(key, 1);
          ord.order.push_back(key);
        }
  };

  for (int comp = 0; comp < n_comp; ++comp) {
    ord.component_begin.push_back(static_cast<int>(ord.order.size()));
    for (const auto& [s, key] : groups[comp]) sweep_from(key);
  }
  ord.component_begin.push_back(static_cast<int>(ord.order.size()));

  for (int key : irregular)
    if (!numbered.count(key)) {
      ord.order.push_back(key);
      ++ord.uncovered;
    }
  return ord;
}

BandProfile cyclic_band_profile(const linalg::SparseMatrix& a,
                                const IrregularOrdering& ord) {
  const int n = a.rows;
  if (n != a.cols || n != static_cast<int>(ord.order.size()))
    throw Error("cyclic_band_profile: matrix does not match the ordering");
  BandProfile prof;

  // Position ranges: the swept components plus (when present) the appended
  // uncovered tail, which is treated as a plain acyclic segment.
  std::vector<int> bounds(ord.component_begin);
  if (ord.uncovered > 0) bounds.push_back(n);
  const int n_ranges = static_cast<int>(bounds.size()) - 1;
  std::vector<int> range_of(n, -1);
  for (int r = 0; r < n_ranges; ++r)
    for (int p = bounds[r]; p < bounds[r + 1]; ++p) range_of[p] = r;

  // Wrap entries per range, stored as (offset from range head, offset of the
  // other endpoint from the range tail).
  std::vector<std::vector<std::pair<int, int>>> wraps(n_ranges);
  std::vector<char> in_border(n, 0);

  for (int i = 0; i < n; ++i)
    for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
      int j = a.col[k];
      if (i == j) continue;
      int ri = range_of[i], rj = range_of[j];
      if (ri != rj) {
        ++prof.cross;
        in_border[std::max(i, j)] = 1;
        continue;
      }
      int b0 = bounds[ri], nc = bounds[ri + 1] - b0;
      int d = std::abs(i - j);
      bool tail = ord.uncovered > 0 && ri == n_ranges - 1;
      int dc = tail ? d : std::min(d, nc - d);
      prof.bandwidth = std::max(prof.bandwidth, dc);
      if (!tail && nc - d < d)
        wraps[ri].push_back({std::min(i, j) - b0, b0 + nc - 1 - std::max(i, j)});
    }

  // Smallest leading-plus-trailing border per component covering its wraps.
  for (int r = 0; r < n_ranges; ++r) {
    if (wraps[r].empty()) continue;
    int b0 = bounds[r], nc = bounds[r + 1] - b0;
    int best_lead = 0, best_trail = nc, best_total = nc + 1;
    for (int lead = 0; lead <= nc; ++lead) {
      int trail = 0;
      for (auto [from_head, from_tail] : wraps[r])
        if (from_head >= lead) trail = std::max(trail, from_tail + 1);
      if (lead + trail < best_total) {
        best_total = lead + trail;
        best_lead = lead;
        best_trail = trail;
      }
    }
    for (int p = 0; p < best_lead; ++p) in_border[b0 + p] = 1;
    for (int p = 0; p < best_trail; ++p) in_border[b0 + nc - 1 - p] = 1;
  }

  std::vector<int> core_pos(n, -1);
  int nc = 0;
  for (int p = 0; p < n; ++p) {
    if (in_border[p])
      prof.border.push_back(p);
    else
      core_pos[p] = nc++;
  }
  for (int i = 0; i < n; ++i)
    for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
      int j = a.col[k];
      if (core_pos[i] >= 0 && core_pos[j] >= 0)
        prof.band = std::max(prof.band, std::abs(core_pos[i] - core_pos[j]));
    }
  return prof;
}

}  // namespace cutfv

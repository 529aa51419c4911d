#include "cutfv/plg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace cutfv {

namespace {

// Deterministic structureless unit vector (same LCG scheme as the condition
// estimator) used to seed inverse iteration.
std::vector<double> seed_vector(int n) {
  std::vector<double> v(n);
  std::uint64_t s = 0x9e3779b97f4a7c15ull;
  double norm = 0.0;
  for (int i = 0; i < n; ++i) {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    v[i] = 0.5 + static_cast<double>((s >> 11) & 0xffff) / 131072.0;
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// Approximate right singular vector of the smallest singular value of a
// square matrix: a couple of inverse-iteration sweeps v <- A^{-1} A^{-T} v.
// Returns an empty vector when A is singular to the LU's hard zero test.
std::vector<double> smallest_right_singular_vector(const linalg::DenseMatrix& a) {
  const int n = a.rows();
  linalg::LuFactor f;
  try {
    f = linalg::lu_factor(a);
  } catch (const SingularMatrix&) {
    return {};
  }
  std::vector<double> v = seed_vector(n);
  for (int it = 0; it < 2; ++it) {
    std::vector<double> y = linalg::lu_solve_transposed(f, v);
    v = linalg::lu_solve(f, y);
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    if (!(s > 0.0) || !std::isfinite(s)) return {};
    for (double& x : v) x /= s;
  }
  return v;
}

Vec2 lattice_bbox_center(const Grid& g, const std::vector<int>& nodes) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (int key : nodes) {
    CellIndex c = g.index(key);
    Vec2 a = g.corner(c.i, c.j);
    xlo = std::min(xlo, a.x);
    ylo = std::min(ylo, a.y);
    xhi = std::max(xhi, a.x + g.h);
    yhi = std::max(yhi, a.y + g.h);
  }
  return {0.5 * (xlo + xhi), 0.5 * (ylo + yhi)};
}

linalg::DenseMatrix cell_block(const CutCellSet& cells, const MomentTable& moments,
                               const std::vector<int>& nodes, Vec2 p, int degree) {
  const int nb = moment_count(degree);
  linalg::DenseMatrix m(nb, static_cast<int>(nodes.size()));
  for (size_t k = 0; k < nodes.size(); ++k) {
    const MomentSet* ms = moments.find(nodes[k]);
    if (!ms) throw Error("sample matrix: no moments stored for cell " +
                         std::to_string(nodes[k]));
    std::vector<double> mm =
        recenter_moments(ms->cell, ms->p, p, cells.grid.h, moments.n_max);
    for (int j = 0; j < nb; ++j) m(j, static_cast<int>(k)) = mm[j] / ms->cell[0];
  }
  return m;
}

std::string cell_name(const Grid& g, int id) {
  CellIndex c = g.index(id);
  return "(" + std::to_string(c.i) + "," + std::to_string(c.j) + ")";
}

}  // namespace

std::vector<int> feasible_set(const CutCellSet& cells, int i, int radius) {
  const Grid& g = cells.grid;
  CellIndex c = g.index(i);
  std::vector<int> keys;
  for (int dj = -radius; dj <= radius; ++dj)
    for (int di = -radius; di <= radius; ++di) {
      int ii = c.i + di, jj = c.j + dj;
      if (!g.contains(ii, jj)) continue;
      int id = g.id(ii, jj);
      if (cells.kind[id] == CellKind::empty) continue;
      int key = cells.resolve(id);
      if (std::find(keys.begin(), keys.end(), key) == keys.end())
        keys.push_back(key);
    }
  return keys;
}

PoisedLattice generate_poised_lattice(const CutCellSet& cells,
                                      const MomentTable& moments, int anchor,
                                      const PlgConfig& cfg) {
  const Grid& g = cells.grid;
  if (moments.n_max < cfg.degree)
    throw Error("generate_poised_lattice: moment table degree " +
                std::to_string(moments.n_max) + " below lattice degree " +
                std::to_string(cfg.degree));
  if (cells.merge_target[anchor] >= 0 || cells.kind[anchor] == CellKind::empty)
    throw Error("generate_poised_lattice: anchor " + cell_name(g, anchor) +
                " is not a stored cell");
  const int nb = moment_count(cfg.degree);
  const CellIndex ac = g.index(anchor);

  PoisedLattice lat;
  lat.anchor = anchor;
  lat.degree = cfg.degree;
  lat.has_boundary_face = moments.find(anchor)->has_boundary;

  // Best selection seen across all window sizes, accepted at the end when the
  // target condition proves unreachable but the estimate stays under cond_max.
  std::vector<int> best_nodes;
  double best_cond = std::numeric_limits<double>::infinity();
  Vec2 best_p{};
  int best_swaps = 0;

  // How many of the nearest unused candidates compete at each swap step, and
  // how many consecutive steps may pass without improving the incumbent
  // before the window is declared stalled and the radius grows.
  constexpr int kScanWidth = 16;
  constexpr int kStallLimit = 8;

  int total_swaps = 0;
  std::vector<int> nodes;  // carried across window growth to keep progress
  bool hit_target = false;
  for (int radius = cfg.radius; radius <= cfg.max_radius && !hit_target;
       ++radius) {
    std::vector<int> cand = feasible_set(cells, anchor, radius);
    if (static_cast<int>(cand.size()) < nb) {
      if (radius == cfg.max_radius && best_nodes.empty())
        throw InsufficientNodes("poised lattice at " + cell_name(g, anchor) +
                                ": only " + std::to_string(cand.size()) +
                                " stored cells within radius " +
                                std::to_string(radius) + ", need " +
                                std::to_string(nb));
      continue;
    }
    // Nearest-first, deterministic: squared Euclidean index distance, ties in
    // (j, i) lexicographic order.
    std::sort(cand.begin(), cand.end(), [&](int a, int b) {
      CellIndex ca = g.index(a), cb = g.index(b);
      long da = static_cast<long>(ca.i - ac.i) * (ca.i - ac.i) +
                static_cast<long>(ca.j - ac.j) * (ca.j - ac.j);
      long db = static_cast<long>(cb.i - ac.i) * (cb.i - ac.i) +
                static_cast<long>(cb.j - ac.j) * (cb.j - ac.j);
      if (da != db) return da < db;
      return ca < cb;
    });

    if (nodes.empty()) nodes.assign(cand.begin(), cand.begin() + nb);
    std::vector<char> used(cand.size(), 0);
    for (size_t c = 0; c < cand.size(); ++c)
      if (std::find(nodes.begin(), nodes.end(), cand[c]) != nodes.end())
        used[c] = 1;

    auto evaluate = [&](const std::vector<int>& sel, Vec2& p_out) {
      p_out = lattice_bbox_center(g, sel);
      linalg::DenseMatrix m = cell_block(cells, moments, sel, p_out, cfg.degree);
      return linalg::condition_2norm_estimate(m);
    };

    int stall = 0;
    while (true) {
      Vec2 p = lattice_bbox_center(g, nodes);
      linalg::DenseMatrix m = cell_block(cells, moments, nodes, p, cfg.degree);
      double cond = linalg::condition_2norm_estimate(m);
      if (cond < 0.99 * best_cond) {
        best_cond = cond;
        best_nodes = nodes;
        best_p = p;
        best_swaps = total_swaps;
        stall = 0;
      } else if (++stall > kStallLimit) {
        break;  // wandering without progress: widen the window
      }
      if (cond <= cfg.target_cond) {
        hit_target = true;
        break;
      }
      if (total_swaps >= cfg.swap_budget) break;

      // Evict the node carrying the largest component of the (estimated)
      // smallest right singular vector: the most redundant column.  The
      // anchor is never evicted.
      std::vector<double> v = smallest_right_singular_vector(m);
      int victim = -1;
      double score_max = -1.0;
      for (int k = 0; k < nb; ++k) {
        if (nodes[k] == anchor) continue;
        double score = v.empty() ? static_cast<double>(k) : std::abs(v[k]);
        if (score > score_max) {
          score_max = score;
          victim = k;
        }
      }

      // Bring in whichever of the nearest unused candidates conditions the
      // lattice best.  The narrow scan keeps the step cheap; quality is
      // recovered by iterating.
      const int evicted = nodes[victim];
      int pick = -1, scanned = 0;
      double pick_cond = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < cand.size() && scanned < kScanWidth; ++c) {
        if (used[c]) continue;
        ++scanned;
        nodes[victim] = cand[c];
        Vec2 pq;
        double cq = evaluate(nodes, pq);
        if (cq < pick_cond) {
          pick_cond = cq;
          pick = static_cast<int>(c);
        }
      }
      if (pick < 0) {
        nodes[victim] = evicted;
        break;  // candidate pool exhausted at this window size
      }
      nodes[victim] = cand[pick];
      used[pick] = 1;
      ++total_swaps;
    }
    if (total_swaps >= cfg.swap_budget) break;
  }
  if (best_cond <= cfg.cond_max) {
    lat.nodes = std::move(best_nodes);
    lat.condition = best_cond;
    lat.swaps_used = best_swaps;
    lat.p = best_p;
    return lat;
  }
  throw PoisednessFailure("poised lattice at " + cell_name(g, anchor) +
                          ": no selection within the search budget met the "
                          "condition threshold " +
                          std::to_string(cfg.cond_max));
}

linalg::DenseMatrix sample_cell_block(const CutCellSet& cells,
                                      const MomentTable& moments,
                                      const PoisedLattice& lat) {
  return cell_block(cells, moments, lat.nodes, lat.p, lat.degree);
}

linalg::DenseMatrix sample_matrix(const CutCellSet& cells,
                                  const MomentTable& moments,
                                  const PoisedLattice& lat, BoundaryKind bc,
                                  double gamma1, double gamma2) {
  linalg::DenseMatrix block = sample_cell_block(cells, moments, lat);
  if (!lat.has_boundary_face) return block;
  const MomentSet* ms = moments.find(lat.anchor);
  std::vector<double> bcol =
      boundary_column(*ms, lat.p, lat.degree, bc, gamma1, gamma2);
  linalg::DenseMatrix m(block.rows(), block.cols() + 1);
  for (int j = 0; j < block.rows(); ++j) {
    for (int k = 0; k < block.cols(); ++k) m(j, k) = block(j, k);
    m(j, block.cols()) = bcol[j];
  }
  return m;
}

void dump_plg_csv(const CutCellSet& cells,
                  const std::vector<PoisedLattice>& lattices, std::ostream& out) {
  out << "anchor_i,anchor_j,n_nodes,condition,swaps_used\n";
  char buf[32];
  for (const PoisedLattice& lat : lattices) {
    CellIndex c = cells.grid.index(lat.anchor);
    std::snprintf(buf, sizeof buf, "%.3e", lat.condition);
    out << c.i << ',' << c.j << ',' << lat.nodes.size() << ',' << buf << ','
        << lat.swaps_used << '\n';
  }
}

}  // namespace cutfv

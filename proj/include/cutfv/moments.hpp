#pragma once

#include <array>
#include <functional>
#include <unordered_map>
#include <vector>

#include "cutfv/common.hpp"
#include "cutfv/cutcell.hpp"
#include "cutfv/domain.hpp"

namespace cutfv {

// ---------------------------------------------------------------------------
// Bivariate multi-indices (a1, a2), graded lexicographic with a1 leading:
//   (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), (3,0), ...
// ---------------------------------------------------------------------------

inline int moment_count(int n_max) { return (n_max + 1) * (n_max + 2) / 2; }

inline int moment_index(int a1, int a2) {
  int g = a1 + a2;
  return g * (g + 1) / 2 + (g - a1);
}

inline void moment_exponents(int idx, int& a1, int& a2) {
  int g = 0;
  while ((g + 1) * (g + 2) / 2 <= idx) ++g;
  a2 = idx - g * (g + 1) / 2;
  a1 = g - a2;
}

// ---------------------------------------------------------------------------
// Scaled geometric moments of one control volume about a center p.  With
// u = (x - p1)/h and v = (y - p2)/h:
//
//   cell[α] = ∫_C u^a1 v^a2 dx dy          (so cell[0] is the volume)
//   line[α] = ∫_S u^a1 v^a2 ds             (so line[0] is |S|)
//   n1[α], n2[α] = ∫_S n_d u^a1 v^a2 ds    (n = outward unit normal)
//
// S is the domain-boundary portion of the control volume: curve segments plus
// any rectangle-wall segments.  Boundary bits shorter than 1e-13*h are dropped
// and counted in `dropped`.  All integrals are raw (not length-averaged).
// ---------------------------------------------------------------------------

struct MomentSet {
  Vec2 p;
  double h = 0.0;
  int n_max = 0;
  std::vector<double> cell;
  bool has_boundary = false;
  std::vector<double> line, n1, n2;
  // Fluid portions of the key cell's four grid faces (W,E,S,N): ∫ u^a1 v^a2 ds.
  std::array<std::vector<double>, 4> face;
  int dropped = 0;
};

// Moments of the full square cell centered at c over |α| <= n_max, about p.
// Closed form, exact.
std::vector<double> square_moments(Vec2 c, double h, Vec2 p, int n_max);

// Recenters a family of moments from center q to center p (same h); applies
// the binomial expansion of ((x-p)/h)^α = ((x-q)/h + (q-p)/h)^α, exact.
std::vector<double> recenter_moments(const std::vector<double>& m, Vec2 q, Vec2 p,
                                     double h, int n_max);

// Moments for the stored control volume `key` (a merged composite contributes
// all of its constituent atoms), about the center of the bounding box of the
// constituent cells.  Green's formula reduces the area integrals to the
// boundary loops; quadrature orders are chosen to integrate the parametric
// integrands exactly.
MomentSet cell_moment_set(const Domain& dom, const CutCellSet& cells, int key, int n_max);

struct MomentTable {
  int n_max = 0;
  double h = 0.0;
  std::unordered_map<int, MomentSet> entries;  // one per stored key

  const MomentSet* find(int key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// Moment sets for every stored control volume, pure cells included (they get
// the universal closed-form table).
MomentTable compute_moments(const Domain& dom, const CutCellSet& cells, int n_max);

// Boundary-average column ⟨⟨𝒩 φ_α⟩⟩ over S of the given moment set, for the
// scaled monomial basis φ_α = u^a1 v^a2 about center p, |α| <= n_out:
//   dirichlet: 𝒩 = identity; neumann: 𝒩 = n·∇; robin: γ₁ + γ₂ n·∇.
// Requires n_out <= ms.n_max and a nonempty boundary.
std::vector<double> boundary_column(const MomentSet& ms, Vec2 p, int n_out,
                                    BoundaryKind bc, double gamma1 = 0.0,
                                    double gamma2 = 0.0);

// Average of a smooth function over the control volume of `key` (pure cells
// allowed).  Tensor Gauss-Legendre on squares; iterated Green cubature on cut
// atoms.  Accuracy is far below discretization error for analytic f.
double cell_average(const Domain& dom, const CutCellSet& cells, int key,
                    const std::function<double(Vec2)>& f);

// Arc-length average of g over the boundary portion S of `key`; g receives
// the point and the outward unit normal of the spline geometry.
double boundary_average(const Domain& dom, const CutCellSet& cells, int key,
                        const std::function<double(Vec2, Vec2)>& g);

}  // namespace cutfv

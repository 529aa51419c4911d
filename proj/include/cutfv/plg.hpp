#pragma once

#include <iosfwd>
#include <vector>

#include "cutfv/common.hpp"
#include "cutfv/cutcell.hpp"
#include "cutfv/linalg.hpp"
#include "cutfv/moments.hpp"

namespace cutfv {

// Search configuration for poised-lattice generation.
struct PlgConfig {
  int degree = 4;           // polynomial degree n; the lattice has (n+1)(n+2)/2 nodes
  double target_cond = 5e2; // the search keeps swapping until it reaches this;
                            // the interpolation constants of the derived
                            // operator rows track the conditioning, so the
                            // search polishes well below the acceptance gate
  double cond_max = 1e8;    // hard acceptance threshold for the best lattice seen
  int radius = 3;           // initial feasible-set window (L-inf index distance)
  int max_radius = 6;       // window growth limit
  int swap_budget = 200;    // total node swaps across all window sizes
};

// A poised lattice of stencil cells around an anchor cell: enough nearby
// stored control volumes that averaging the degree-n monomial basis over them
// produces a well-conditioned square sample matrix.
struct PoisedLattice {
  int anchor = -1;                 // stored key id
  std::vector<int> nodes;          // N stored key ids; contains the anchor
  bool has_boundary_face = false;  // anchor's boundary portion S is nonempty,
                                   // so the sample matrix gains a trailing
                                   // boundary column
  int degree = 4;
  double condition = 0.0;          // 2-norm estimate for the cell-average block
  int swaps_used = 0;
  Vec2 p;                          // basis center: lattice bounding-box center
};

// All stored keys whose control volume touches the (2*radius+1)^2 index
// window around cell i: every non-empty grid cell in the window is resolved
// through merging to its stored key, and each key appears once.
std::vector<int> feasible_set(const CutCellSet& cells, int i, int radius);

// Deterministic search for a poised lattice anchored at `anchor` (a stored
// key).  Seeds with the N nodes nearest to the anchor in Euclidean index
// distance (ties broken lexicographically), then repeatedly evicts the node
// most responsible for the smallest singular value (largest component of the
// smallest right singular vector, estimated by inverse iteration) and brings
// in whichever of the nearest unused candidates minimizes the resulting
// condition estimate.  Swapping stops once the estimate reaches
// cfg.target_cond; when the swaps stall without improving the incumbent, or
// the candidate pool runs out, the window grows up to cfg.max_radius with the
// working selection carried along; finally the best selection seen anywhere
// is accepted as long as it passes cfg.cond_max.  Throws InsufficientNodes
// when even the largest window holds fewer than N stored cells, and
// PoisednessFailure when no selection passes cfg.cond_max.
PoisedLattice generate_poised_lattice(const CutCellSet& cells,
                                      const MomentTable& moments, int anchor,
                                      const PlgConfig& cfg = {});

// Cell-average block of the sample matrix: N x N with entry (j, k) equal to
// the average of the j-th scaled monomial (graded lexicographic, centered at
// lat.p, scaled by h) over the control volume of node k.
linalg::DenseMatrix sample_cell_block(const CutCellSet& cells,
                                      const MomentTable& moments,
                                      const PoisedLattice& lat);

// Full sample matrix: the cell-average block plus, when the anchor carries a
// boundary portion, the trailing column of boundary averages <<N phi_j>> over
// the anchor's S for the given boundary operator.
linalg::DenseMatrix sample_matrix(const CutCellSet& cells,
                                  const MomentTable& moments,
                                  const PoisedLattice& lat, BoundaryKind bc,
                                  double gamma1 = 0.0, double gamma2 = 0.0);

// Lattice diagnostics: anchor_i,anchor_j,n_nodes,condition,swaps_used.
void dump_plg_csv(const CutCellSet& cells,
                  const std::vector<PoisedLattice>& lattices, std::ostream& out);

}  // namespace cutfv

#pragma once

#include <unordered_map>
#include <vector>

#include "cutfv/cutcell.hpp"
#include "cutfv/linalg.hpp"

namespace cutfv {

// Boundary-following order over the irregular control volumes.  Irregular
// cells are grouped by the boundary component their own S_i belongs to (the
// rectangle walls first, then each curve in domain order); within a
// component, boundary-carrying cells are visited by increasing boundary
// parameter s(i) (the parameter of the boundary point nearest to the cell
// center), and each visit numbers every not-yet-numbered irregular cell
// within L-infinity index distance 2.  Cells the sweep never reaches are
// appended at the end in key order and counted in `uncovered`.
struct IrregularOrdering {
  std::vector<int> order;                   // position -> stored key
  std::vector<int> component_begin;         // component start positions; the
                                            // final entry is the count of
                                            // swept (covered) positions
  std::unordered_map<int, double> s_value;  // boundary-carrying key -> s
  int uncovered = 0;
};

IrregularOrdering order_irregular(const Domain& dom, const CutCellSet& cells,
                                  const Classification& cl);

// Banded-plus-border shape of a sparse matrix whose rows/columns follow an
// IrregularOrdering.  Within each boundary component the order is cyclic, so
// couplings wrap from the tail of a component's range to its head; those
// wrap entries (and any coupling that crosses components) are covered by a
// small set of border positions, chosen per component as the smallest
// leading-plus-trailing block pair, and the rest of the matrix is banded.
struct BandProfile {
  int bandwidth = 0;        // max cyclic index distance within any component
  int band = 0;             // band of the core once border rows/cols leave
  std::vector<int> border;  // positions handled densely, ascending
  int cross = 0;            // couplings between different components
};

BandProfile cyclic_band_profile(const linalg::SparseMatrix& a,
                                const IrregularOrdering& ord);

}  // namespace cutfv

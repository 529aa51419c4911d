#pragma once

#include <functional>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "cutfv/common.hpp"
#include "cutfv/cutcell.hpp"
#include "cutfv/linalg.hpp"
#include "cutfv/moments.hpp"
#include "cutfv/ordering.hpp"
#include "cutfv/plg.hpp"

namespace cutfv {

// Constant coefficients of the operator L u = a u_xx + b u_xy + c u_yy.
struct EllipticCoefficients {
  double a = 1.0;
  double b = 0.0;
  double c = 1.0;
  bool elliptic() const { return b * b - 4.0 * a * c < 0.0; }
};

// One row of the discrete operator:
//   sum_k cells[k].second * <u>_{cells[k].first}  +  boundary_weight * <<N u>>
// approximates <L u> over the anchor's control volume.  Cell weights carry
// units 1/length^2 and are stored key-ascending.
//
// Standard rows are built so that their weights are exact integer multiples
// of one power-of-two base whose integer coefficients sum to zero; partial
// sums of the weights are then exactly representable, and a constant field is
// annihilated exactly in every summation order.
struct OperatorRow {
  int anchor = -1;
  std::vector<std::pair<int, double>> cells;
  double boundary_weight = 0.0;
  bool standard = true;

  double weight_sum() const;  // left-to-right over `cells`
};

// Applies the row to a field given by cell averages (indexed by stored key)
// and the boundary average over the anchor's boundary portion.
double apply_row(const OperatorRow& row, const std::function<double(int)>& cell_avg,
                 double boundary_avg = 0.0);

// Fourth-order centered stencils on regular cells.  The anchor and every
// referenced cell must be pure; this is exactly the regularity criterion and
// is not re-checked here.
OperatorRow standard_laplacian_row(const Grid& g, int anchor);
OperatorRow standard_gradient_row(const Grid& g, int anchor, int axis);
OperatorRow standard_cross_row(const Grid& g, int anchor);
OperatorRow standard_elliptic_row(const Grid& g, int anchor,
                                  const EllipticCoefficients& co);

// Target vector for a lattice row: entry j is the average of L phi_j over the
// anchor's control volume, for the scaled monomial basis phi_j centered at
// lat.p.  Derivatives of monomials are monomials, so each entry is an exact
// combination of the anchor's recentered moments.
std::vector<double> elliptic_target(const MomentTable& moments,
                                    const PoisedLattice& lat,
                                    const EllipticCoefficients& co);

// Node penalties for the minimum-norm solve: w_k = max(|j_k - i|_2, 1/2) in
// index distance, plus a trailing 1/2 for the boundary entry when the anchor
// carries one.  Large penalties suppress far-away nodes in the row.
std::vector<double> plg_weights(const CutCellSet& cells, const PoisedLattice& lat);

// Boundary condition applied on one boundary component.
struct BoundaryOperator {
  BoundaryKind kind = BoundaryKind::dirichlet;
  double gamma1 = 0.0;  // robin: gamma1 u + gamma2 n.grad u
  double gamma2 = 0.0;
  bool operator==(const BoundaryOperator&) const = default;
};

struct BoundaryConditions {
  BoundaryOperator wall;                // rectangle sides
  std::vector<BoundaryOperator> curve;  // one per domain curve
};

// The boundary operator acting on the anchor's boundary portion S.  All
// pieces of S (wall segments, curve chains of any constituent atom) must
// carry the same operator; differing operators on one control volume raise
// UnsupportedGeometry, and a boundary-free anchor raises Error.
BoundaryOperator anchor_boundary_operator(const CutCellSet& cells,
                                          const BoundaryConditions& bcs, int key);

// Weighted minimum-norm row for an irregular anchor: solves M beta = L-hat
// where M is the lattice sample matrix (plus the anchor's boundary column
// when present), minimizing sum_k beta_k^2 / w_k.  The defining constraint is
// re-checked to ||M beta - L|| <= 1e-10 (1 + ||L||); violations and singular
// normal matrices raise PoisednessFailure.
OperatorRow plg_row(const CutCellSet& cells, const MomentTable& moments,
                    const PoisedLattice& lat, const EllipticCoefficients& co,
                    const BoundaryOperator& bc);

// Generates a poised lattice for every irregular stored key.
std::unordered_map<int, PoisedLattice> build_lattices(const CutCellSet& cells,
                                                      const MomentTable& moments,
                                                      const Classification& cl,
                                                      const PlgConfig& cfg = {});

// The discrete operator split into blocks: u1 collects regular cells
// (key-ascending), u2 the irregular cells in boundary-sweep order.  The
// boundary weights form a diagonal matrix N over u2 rows, so the system reads
//   [L11 L12; L21 L22] [u1;u2] = f - N g
// with g the boundary averages <<N u>> per u2 row (zero rows where the anchor
// has no boundary portion).
struct BlockOperator {
  EllipticCoefficients co;
  std::vector<int> u1_keys;
  std::vector<int> u2_keys;  // equals the sweep ordering
  std::unordered_map<int, int> u1_pos;
  std::unordered_map<int, int> u2_pos;
  linalg::SparseMatrix l11, l12, l21, l22;
  std::vector<double> boundary_weight;  // per u2 row

  int dim1() const { return static_cast<int>(u1_keys.size()); }
  int dim2() const { return static_cast<int>(u2_keys.size()); }

  // y = L x over the split vectors.
  void apply(std::span<const double> x1, std::span<const double> x2,
             std::span<double> y1, std::span<double> y2) const;
};

BlockOperator assemble(const CutCellSet& cells, const Classification& cl,
                       const MomentTable& moments,
                       const std::unordered_map<int, PoisedLattice>& lattices,
                       const IrregularOrdering& ord,
                       const EllipticCoefficients& co,
                       const BoundaryConditions& bcs);

// Debug dumps: coordinate-format `row,col,value` text per block and the
// key -> (block, position) split map.
void dump_sparse_coo(const linalg::SparseMatrix& a, std::ostream& out);
void dump_block_operator(const BlockOperator& op, std::ostream& out);
void dump_split_csv(const BlockOperator& op, std::ostream& out);

}  // namespace cutfv

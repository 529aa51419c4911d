#include "cutfv/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace cutfv {

namespace {

std::string cell_name(const Grid& g, int key) {
  CellIndex c = g.index(key);
  return "(" + std::to_string(c.i) + "," + std::to_string(c.j) + ")";
}

// Snaps the weights onto one power-of-two grid fine enough that the integer
// quotients stay below 2^49.  Every partial sum of the snapped weights is
// then an exactly representable integer multiple of the grid, so a zero
// integer total makes the row annihilate constants in any summation order.
// With center_key >= 0 that cell absorbs the closure; otherwise the stencil
// must be antisymmetric so the quotients cancel by themselves.
void quantize_row(std::vector<std::pair<int, double>>& w, int center_key) {
  double wmax = 0.0;
  for (const auto& [key, v] : w)
    if (key != center_key) wmax = std::max(wmax, std::abs(v));
  if (wmax == 0.0) {
    w.clear();
    return;
  }
  int e = 0;
  std::frexp(wmax, &e);
  const double unit = std::ldexp(1.0, e - 49);
  double total = 0.0;
  for (auto& [key, v] : w) {
    if (key == center_key) continue;
    double n = std::round(v / unit);
    v = n * unit;
    total += n;
  }
  if (center_key >= 0) {
    for (auto& [key, v] : w)
      if (key == center_key) v = -total * unit;
  } else if (total != 0.0) {
    throw Error("quantize_row: open stencil does not cancel");
  }
}

// Row of a * d^2/dx^2 + b * d^2/dxdy + c * d^2/dy^2 from the centered
// fourth-order formulas, all over the common base 1/(144 h^2):
//   per-axis second derivative: (-12, 192, -360, 192, -12) at offsets
//   (-2..2); cross term: products of the one-sided gradient integers
//   (+-8 at offset +-1, -+1 at offset +-2).
OperatorRow compose_row(const Grid& g, int anchor, double a, double b, double c) {
  const CellIndex ci = g.index(anchor);
  const double base = 1.0 / (144.0 * g.h * g.h);
  auto at = [&](int di, int dj) {
    if (!g.contains(ci.i + di, ci.j + dj))
      throw Error("standard stencil leaves the grid at cell " + cell_name(g, anchor));
    return g.id(ci.i + di, ci.j + dj);
  };

  OperatorRow row;
  row.anchor = anchor;
  const int lap[2] = {192, -12};  // offsets 1 and 2
  for (int m = 1; m <= 2; ++m) {
    row.cells.push_back({at(+m, 0), a * lap[m - 1] * base});
    row.cells.push_back({at(-m, 0), a * lap[m - 1] * base});
    row.cells.push_back({at(0, +m), c * lap[m - 1] * base});
    row.cells.push_back({at(0, -m), c * lap[m - 1] * base});
  }
  auto grad_int = [](int m) { return m == 1 ? 8.0 : m == -1 ? -8.0 : m == 2 ? -1.0 : 1.0; };
  for (int m1 : {-2, -1, 1, 2})
    for (int m2 : {-2, -1, 1, 2})
      row.cells.push_back({at(m1, m2), b * grad_int(m1) * grad_int(m2) * base});
  row.cells.push_back({anchor, (a + c) * -360.0 * base});

  quantize_row(row.cells, anchor);
  std::sort(row.cells.begin(), row.cells.end());
  std::erase_if(row.cells, [](const auto& e) { return e.second == 0.0; });
  return row;
}

}  // namespace

double OperatorRow::weight_sum() const {
  double s = 0.0;
  for (const auto& [key, v] : cells) s += v;
  return s;
}

double apply_row(const OperatorRow& row, const std::function<double(int)>& cell_avg,
                 double boundary_avg) {
  double s = 0.0;
  for (const auto& [key, v] : row.cells) s += v * cell_avg(key);
  return s + row.boundary_weight * boundary_avg;
}

OperatorRow standard_laplacian_row(const Grid& g, int anchor) {
  return compose_row(g, anchor, 1.0, 0.0, 1.0);
}

OperatorRow standard_cross_row(const Grid& g, int anchor) {
  return compose_row(g, anchor, 0.0, 1.0, 0.0);
}

OperatorRow standard_elliptic_row(const Grid& g, int anchor,
                                  const EllipticCoefficients& co) {
  if (!co.elliptic())
    throw SolverError("operator coefficients are not elliptic");
  return compose_row(g, anchor, co.a, co.b, co.c);
}

OperatorRow standard_gradient_row(const Grid& g, int anchor, int axis) {
  const CellIndex ci = g.index(anchor);
  const double base = 1.0 / (12.0 * g.h);
  auto at = [&](int m) {
    int i = ci.i + (axis == 0 ? m : 0), j = ci.j + (axis == 0 ? 0 : m);
    if (!g.contains(i, j))
      throw Error("standard stencil leaves the grid at cell " + cell_name(g, anchor));
    return g.id(i, j);
  };
  OperatorRow row;
  row.anchor = anchor;
  row.cells = {{at(+2), -1.0 * base},
               {at(+1), 8.0 * base},
               {at(-1), -8.0 * base},
               {at(-2), 1.0 * base}};
  quantize_row(row.cells, -1);
  std::sort(row.cells.begin(), row.cells.end());
  return row;
}

std::vector<double> elliptic_target(const MomentTable& moments,
                                    const PoisedLattice& lat,
                                    const EllipticCoefficients& co) {
  const MomentSet* ms = moments.find(lat.anchor);
  if (!ms) throw Error("elliptic_target: anchor has no moment set");
  std::vector<double> mm = recenter_moments(ms->cell, ms->p, lat.p, ms->h, ms->n_max);
  const double v = mm[0];
  const double h2 = ms->h * ms->h;
  const int n = moment_count(lat.degree);
  std::vector<double> lhat(n, 0.0);
  for (int j = 0; j < n; ++j) {
    int a1 = 0, a2 = 0;
    moment_exponents(j, a1, a2);
    double acc = 0.0;
    if (a1 >= 2) acc += co.a * (a1 * (a1 - 1)) * mm[moment_index(a1 - 2, a2)];
    if (a1 >= 1 && a2 >= 1) acc += co.b * (a1 * a2) * mm[moment_index(a1 - 1, a2 - 1)];
    if (a2 >= 2) acc += co.c * (a2 * (a2 - 1)) * mm[moment_index(a1, a2 - 2)];
    lhat[j] = acc / (h2 * v);
  }
  return lhat;
}

std::vector<double> plg_weights(const CutCellSet& cells, const PoisedLattice& lat) {
  const CellIndex ai = cells.grid.index(lat.anchor);
  std::vector<double> w;
  w.reserve(lat.nodes.size() + 1);
  for (int key : lat.nodes) {
    const CellIndex ji = cells.grid.index(key);
    double d = std::hypot(double(ji.i - ai.i), double(ji.j - ai.j));
    w.push_back(std::max(d, 0.5));
  }
  if (lat.has_boundary_face) w.push_back(0.5);
  return w;
}

BoundaryOperator anchor_boundary_operator(const CutCellSet& cells,
                                          const BoundaryConditions& bcs, int key) {
  const StoredCell* sc = cells.stored_geom(key);
  if (!sc)
    throw Error("anchor_boundary_operator: cell " + cell_name(cells.grid, key) +
                " has no boundary geometry");
  bool found = false;
  BoundaryOperator op;
  auto take = [&](const BoundaryOperator& o) {
    if (!found) {
      op = o;
      found = true;
    } else if (!(op == o)) {
      throw UnsupportedGeometry(
          "control volume " + cell_name(cells.grid, key) +
          " touches boundary components with different boundary operators");
    }
  };
  if (!sc->walls.empty()) take(bcs.wall);
  for (const CellAtom& at : sc->atoms)
    for (const ChainRef& ch : at.chains) {
      if (ch.curve < 0 || ch.curve >= static_cast<int>(bcs.curve.size()))
        throw Error("no boundary condition given for curve " + std::to_string(ch.curve));
      take(bcs.curve[ch.curve]);
    }
  if (!found)
    throw Error("anchor_boundary_operator: cell " + cell_name(cells.grid, key) +
                " carries no boundary portion");
  return op;
}

OperatorRow plg_row(const CutCellSet& cells, const MomentTable& moments,
                    const PoisedLattice& lat, const EllipticCoefficients& co,
                    const BoundaryOperator& bc) {
  const linalg::DenseMatrix m =
      lat.has_boundary_face
          ? sample_matrix(cells, moments, lat, bc.kind, bc.gamma1, bc.gamma2)
          : sample_cell_block(cells, moments, lat);
  const std::vector<double> lhat = elliptic_target(moments, lat, co);
  const std::vector<double> pen = plg_weights(cells, lat);
  std::vector<double> winv(pen.size());
  for (size_t t = 0; t < pen.size(); ++t) winv[t] = 1.0 / pen[t];

  std::vector<double> beta;
  try {
    beta = linalg::min_norm_solve(m.transposed(), winv, lhat);
  } catch (const SingularNormalMatrix&) {
    throw PoisednessFailure("minimum-norm system singular at anchor " +
                            cell_name(cells.grid, lat.anchor));
  }

  const std::vector<double> mb = m.apply(beta);
  double rn = 0.0, ln = 0.0;
  for (size_t j = 0; j < mb.size(); ++j) {
    rn += (mb[j] - lhat[j]) * (mb[j] - lhat[j]);
    ln += lhat[j] * lhat[j];
  }
  if (std::sqrt(rn) > 1e-10 * (1.0 + std::sqrt(ln)))
    throw PoisednessFailure("lattice row failed the defining constraint at anchor " +
                            cell_name(cells.grid, lat.anchor));

  OperatorRow row;
  row.anchor = lat.anchor;
  row.standard = false;
  const int nn = static_cast<int>(lat.nodes.size());
  row.cells.reserve(nn);
  for (int k = 0; k < nn; ++k) row.cells.push_back({lat.nodes[k], beta[k]});
  if (lat.has_boundary_face) row.boundary_weight = beta[nn];
  std::sort(row.cells.begin(), row.cells.end());
  return row;
}

std::unordered_map<int, PoisedLattice> build_lattices(const CutCellSet& cells,
                                                      const MomentTable& moments,
                                                      const Classification& cl,
                                                      const PlgConfig& cfg) {
  std::unordered_map<int, PoisedLattice> lattices;
  for (int key : cells.stored) {
    if (cl.regular[key]) continue;
    try {
      lattices.emplace(key, generate_poised_lattice(cells, moments, key, cfg));
    } catch (const SolverError& err) {
      throw PoisednessFailure(std::string(err.what()) + " [anchor " +
                              cell_name(cells.grid, key) + "]");
    }
  }
  return lattices;
}

void BlockOperator::apply(std::span<const double> x1, std::span<const double> x2,
                          std::span<double> y1, std::span<double> y2) const {
  l11.apply(x1, y1);
  l12.apply_add(x2, y1, 1.0);
  l21.apply(x1, y2);
  l22.apply_add(x2, y2, 1.0);
}

BlockOperator assemble(const CutCellSet& cells, const Classification& cl,
                       const MomentTable& moments,
                       const std::unordered_map<int, PoisedLattice>& lattices,
                       const IrregularOrdering& ord,
                       const EllipticCoefficients& co,
                       const BoundaryConditions& bcs) {
  if (!co.elliptic())
    throw SolverError("operator coefficients are not elliptic");

  BlockOperator op;
  op.co = co;
  for (int key : cells.stored)
    if (cl.regular[key]) {
      op.u1_pos.emplace(key, static_cast<int>(op.u1_keys.size()));
      op.u1_keys.push_back(key);
    }
  op.u2_keys = ord.order;
  if (static_cast<int>(op.u2_keys.size()) != cl.n_irregular)
    throw SolverError("cell ordering does not cover the irregular cells");
  for (int r = 0; r < static_cast<int>(op.u2_keys.size()); ++r) {
    int key = op.u2_keys[r];
    if (cl.regular[key])
      throw SolverError("cell ordering lists a regular cell");
    op.u2_pos.emplace(key, r);
  }

  const int n1 = op.dim1(), n2 = op.dim2();
  std::vector<int> i11, j11, i12, j12, i21, j21, i22, j22;
  std::vector<double> v11, v12, v21, v22;
  op.boundary_weight.assign(n2, 0.0);

  auto scatter = [&](int r, bool upper, const OperatorRow& row) {
    for (const auto& [key, w] : row.cells) {
      auto it1 = op.u1_pos.find(key);
      if (it1 != op.u1_pos.end()) {
        (upper ? i11 : i21).push_back(r);
        (upper ? j11 : j21).push_back(it1->second);
        (upper ? v11 : v21).push_back(w);
        continue;
      }
      auto it2 = op.u2_pos.find(key);
      if (it2 == op.u2_pos.end())
        throw SolverError("operator row references unknown cell " +
                          cell_name(cells.grid, key));
      (upper ? i12 : i22).push_back(r);
      (upper ? j12 : j22).push_back(it2->second);
      (upper ? v12 : v22).push_back(w);
    }
  };

  for (int r = 0; r < n1; ++r)
    scatter(r, true, standard_elliptic_row(cells.grid, op.u1_keys[r], co));

  for (int r = 0; r < n2; ++r) {
    const int key = op.u2_keys[r];
    auto it = lattices.find(key);
    if (it == lattices.end())
      throw SolverError("no lattice for irregular cell " + cell_name(cells.grid, key));
    const PoisedLattice& lat = it->second;
    BoundaryOperator bop;
    if (lat.has_boundary_face) bop = anchor_boundary_operator(cells, bcs, key);
    OperatorRow row = plg_row(cells, moments, lat, co, bop);
    scatter(r, false, row);
    op.boundary_weight[r] = row.boundary_weight;
  }

  op.l11 = linalg::SparseMatrix::from_triplets(n1, n1, std::move(i11), std::move(j11),
                                               std::move(v11));
  op.l12 = linalg::SparseMatrix::from_triplets(n1, n2, std::move(i12), std::move(j12),
                                               std::move(v12));
  op.l21 = linalg::SparseMatrix::from_triplets(n2, n1, std::move(i21), std::move(j21),
                                               std::move(v21));
  op.l22 = linalg::SparseMatrix::from_triplets(n2, n2, std::move(i22), std::move(j22),
                                               std::move(v22));
  return op;
}

void dump_sparse_coo(const linalg::SparseMatrix& a, std::ostream& out) {
  char buf[64];
  for (int i = 0; i < a.rows; ++i)
    for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", i, a.col[k], a.val[k]);
      out << buf;
    }
}

void dump_block_operator(const BlockOperator& op, std::ostream& out) {
  out << "# l11 " << op.l11.rows << "x" << op.l11.cols << "\n";
  dump_sparse_coo(op.l11, out);
  out << "# l12 " << op.l12.rows << "x" << op.l12.cols << "\n";
  dump_sparse_coo(op.l12, out);
  out << "# l21 " << op.l21.rows << "x" << op.l21.cols << "\n";
  dump_sparse_coo(op.l21, out);
  out << "# l22 " << op.l22.rows << "x" << op.l22.cols << "\n";
  dump_sparse_coo(op.l22, out);
  out << "# n " << op.dim2() << "x" << op.dim2() << "\n";
  char buf[64];
  for (int r = 0; r < op.dim2(); ++r)
    if (op.boundary_weight[r] != 0.0) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", r, r, op.boundary_weight[r]);
      out << buf;
    }
}

void dump_split_csv(const BlockOperator& op, std::ostream& out) {
  out << "key,block,pos\n";
  for (int r = 0; r < op.dim1(); ++r) out << op.u1_keys[r] << ",1," << r << "\n";
  for (int r = 0; r < op.dim2(); ++r) out << op.u2_keys[r] << ",2," << r << "\n";
}

}  // namespace cutfv

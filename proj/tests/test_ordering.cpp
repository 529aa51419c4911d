#include "cutfv/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cutfv/cutcell.hpp"
#include "cutfv/domain.hpp"
#include "doctest.h"

using namespace cutfv;

namespace {

Domain box_only(double x0, double y0, double x1, double y1) {
  DomainSpec spec;
  spec.box = {x0, y0, x1, y1};
  return Domain(std::move(spec));
}

Domain p2_domain() {
  DomainSpec spec;
  spec.box = {0, 0, 1, 1};
  spec.curves.push_back(Curve::ellipse({0.5, 0.5}, 0.125, 0.25, true));
  return Domain(std::move(spec));
}

std::vector<int> irregular_keys(const CutCellSet& cells, const Classification& cl) {
  std::vector<int> keys;
  for (int key : cells.stored)
    if (!cl.regular[key]) keys.push_back(key);
  return keys;
}

// Ordering made by hand for band-profile tests: positions are the keys.
IrregularOrdering identity_ordering(std::vector<int> component_begin) {
  IrregularOrdering ord;
  for (int p = 0; p < component_begin.back(); ++p) ord.order.push_back(p);
  ord.component_begin = std::move(component_begin);
  return ord;
}

linalg::SparseMatrix from_entries(int n, const std::vector<std::pair<int, int>>& e) {
  std::vector<int> ti, tj;
  std::vector<double> tv;
  for (auto [i, j] : e) {
    ti.push_back(i);
    tj.push_back(j);
    tv.push_back(1.0);
  }
  return linalg::SparseMatrix::from_triplets(n, n, ti, tj, tv);
}

}  // namespace

TEST_CASE("plain rectangle: wall sweep numbers the rim band without gaps") {
  Domain dom = box_only(0, 0, 1, 1);
  CutCellSet cells = generate_cut_cells(dom, 1.0 / 16, 0.3);
  Classification cl = classify_cells(cells);
  const Grid& g = cells.grid;

  IrregularOrdering ord = order_irregular(dom, cells, cl);

  // Two-cell-wide band along the walls: 16^2 - 12^2 cells.
  std::vector<int> irr = irregular_keys(cells, cl);
  REQUIRE(irr.size() == 112);
  REQUIRE(ord.order.size() == 112);
  CHECK(ord.uncovered == 0);
  REQUIRE(ord.component_begin == std::vector<int>{0, 112});

  // Every irregular cell appears exactly once.
  std::vector<int> sorted(ord.order);
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == irr);

  // The first boundary cell is (0,0): nearest wall is the bottom one, and its
  // perimeter parameter (counterclockwise from the lower-left corner) is the
  // smallest in the rim.  Its distance-<=2 sweep then runs ring by ring, each
  // ring in row-major order, skipping the regular cell (2,2); the next sweep
  // center (1,0) contributes the first cells beyond that window.
  REQUIRE(ord.order.size() >= 10);
  CHECK(ord.order[0] == g.id(0, 0));
  CHECK(ord.order[1] == g.id(1, 0));
  CHECK(ord.order[2] == g.id(0, 1));
  CHECK(ord.order[3] == g.id(1, 1));
  CHECK(ord.order[4] == g.id(2, 0));
  CHECK(ord.order[5] == g.id(2, 1));
  CHECK(ord.order[6] == g.id(0, 2));
  CHECK(ord.order[7] == g.id(1, 2));
  CHECK(ord.order[8] == g.id(3, 0));
  CHECK(ord.order[9] == g.id(3, 1));

  // Only the 60 rim cells carry a boundary parameter.
  CHECK(ord.s_value.size() == 60);
  const double h = g.h;
  CHECK(ord.s_value.at(g.id(0, 0)) == doctest::Approx(0.5 * h / 4.0).epsilon(1e-14));
  // (15,0) is closest to the bottom wall (tie with the right wall broken in
  // favor of the earlier side in the bottom-right-top-left cycle).
  CHECK(ord.s_value.at(g.id(15, 0)) == doctest::Approx(15.5 * h / 4.0).epsilon(1e-14));
  // (0,1) belongs to the left wall, traversed downward at the end of the loop.
  CHECK(ord.s_value.at(g.id(0, 1)) ==
        doctest::Approx((3.0 + 1.0 - 1.5 * h) / 4.0).epsilon(1e-14));
}

TEST_CASE("ellipse domain: two components, full coverage, deterministic") {
  Domain dom = p2_domain();
  CutCellSet cells = generate_cut_cells(dom, 1.0 / 32, 0.3);
  Classification cl = classify_cells(cells);
  const Grid& g = cells.grid;

  IrregularOrdering ord = order_irregular(dom, cells, cl);
  std::vector<int> irr = irregular_keys(cells, cl);

  REQUIRE(ord.order.size() == irr.size());
  CHECK(ord.uncovered == 0);
  REQUIRE(ord.component_begin.size() == 3);
  CHECK(ord.component_begin.front() == 0);
  CHECK(ord.component_begin.back() == static_cast<int>(ord.order.size()));
  CHECK(ord.component_begin[1] > 0);
  CHECK(ord.component_begin[1] < ord.component_begin[2]);

  std::vector<int> sorted(ord.order);
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == irr);

  for (const auto& [key, s] : ord.s_value) {
    CHECK(s >= 0.0);
    CHECK(s < 1.0);
  }

  // Wall-component cells hug the rim; curve-component cells stay within the
  // sweep radius of a cell that actually carries a piece of the ellipse.
  std::vector<CellIndex> chain_cells;
  for (int key : cells.stored) {
    const StoredCell* sc = cells.stored_geom(key);
    if (sc && sc->has_chains) chain_cells.push_back(g.index(key));
  }
  REQUIRE(!chain_cells.empty());
  for (int p = 0; p < ord.component_begin[1]; ++p) {
    CellIndex c = g.index(ord.order[p]);
    int rim = std::min(std::min(c.i, g.nx - 1 - c.i), std::min(c.j, g.ny - 1 - c.j));
    CHECK(rim <= 2);
  }
  for (int p = ord.component_begin[1]; p < ord.component_begin[2]; ++p) {
    CellIndex c = g.index(ord.order[p]);
    int best = 1000;
    for (CellIndex q : chain_cells)
      best = std::min(best, std::max(std::abs(c.i - q.i), std::abs(c.j - q.j)));
    CHECK(best <= 2);
  }

  IrregularOrdering again = order_irregular(dom, cells, cl);
  CHECK(again.order == ord.order);
  CHECK(again.component_begin == ord.component_begin);
}

TEST_CASE("band profile: single cycle folds the wrap entries into a border") {
  // Tridiagonal ring of 10: cyclic distance 1 everywhere, one wrapping pair.
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < 10; ++i) e.push_back({i, i});
  for (int i = 0; i + 1 < 10; ++i) {
    e.push_back({i, i + 1});
    e.push_back({i + 1, i});
  }
  e.push_back({0, 9});
  e.push_back({9, 0});
  linalg::SparseMatrix a = from_entries(10, e);

  IrregularOrdering ord = identity_ordering({0, 10});
  BandProfile prof = cyclic_band_profile(a, ord);
  CHECK(prof.bandwidth == 1);
  CHECK(prof.band == 1);
  CHECK(prof.border == std::vector<int>{9});
  CHECK(prof.cross == 0);
}

TEST_CASE("band profile: two cycles plus a coupling between them") {
  // Positions 0..5 and 6..9 are separate rings; (5,6) couples them.
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < 10; ++i) e.push_back({i, i});
  for (int i = 0; i + 1 < 6; ++i) {
    e.push_back({i, i + 1});
    e.push_back({i + 1, i});
  }
  for (int i = 6; i + 1 < 10; ++i) {
    e.push_back({i, i + 1});
    e.push_back({i + 1, i});
  }
  e.push_back({0, 5});
  e.push_back({5, 0});
  e.push_back({6, 9});
  e.push_back({9, 6});
  e.push_back({5, 6});
  e.push_back({6, 5});
  linalg::SparseMatrix a = from_entries(10, e);

  IrregularOrdering ord = identity_ordering({0, 6, 10});
  BandProfile prof = cyclic_band_profile(a, ord);
  CHECK(prof.bandwidth == 1);
  CHECK(prof.band == 1);
  CHECK(prof.border == std::vector<int>{5, 6, 9});
  CHECK(prof.cross == 2);
}

TEST_CASE("band profile: wide wrap spreads the border over both ends") {
  // One cycle of 12 with entries at cyclic distance 3: (i, i+3 mod 12).
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < 12; ++i) {
    e.push_back({i, i});
    int j = (i + 3) % 12;
    e.push_back({std::min(i, j), std::max(i, j)});
    e.push_back({std::max(i, j), std::min(i, j)});
  }
  linalg::SparseMatrix a = from_entries(12, e);

  IrregularOrdering ord = identity_ordering({0, 12});
  BandProfile prof = cyclic_band_profile(a, ord);
  CHECK(prof.bandwidth == 3);
  // Wrapping pairs are (9,0),(10,1),(11,2); covering them needs lead + trail
  // of total 3.
  CHECK(prof.border.size() == 3);
  CHECK(prof.band == 3);
  CHECK(prof.cross == 0);
}

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "cutfv/common.hpp"
#include "cutfv/domain.hpp"

namespace cutfv {

// Kind of the control volume associated with a grid cell after merging:
//   empty     - no fluid stored here
//   pure      - exactly the full square cell, untouched by merging
//   interface - cut by the boundary, absorbed by a merge, or a merge target
// Only pure cells may appear in the stencils of regular cells.
enum class CellKind : std::uint8_t { empty, pure, interface };

// A maximal run of a boundary curve between consecutive grid-line crossings;
// it stays within a single grid cell.  Parameters are in piece units, i.e.
// u = piece_index + t; u1 > u0 and may exceed the piece count (wrap).
struct ChainRef {
  int curve = 0;
  double u0 = 0.0, u1 = 0.0;
};

// One edge of a boundary loop.  Curve edges reference a sub-interval of one
// polynomial piece; straight edges run a->b along a cell face.
struct LoopEdge {
  int curve = -1;
  int piece = -1;                // >= 0 for curve edges
  double t0 = 0.0, t1 = 0.0;     // piece-local parameter range for curve edges
  Vec2 a, b;
  int face = -1;                 // 0=W,1=E,2=S,3=N for straight face edges
  bool on_curve() const { return piece >= 0; }
};

struct Loop {
  std::vector<LoopEdge> edges;
  double signed_area = 0.0;      // positive: outer boundary; negative: hole
};

struct FaceSeg {
  double u0 = 0.0, u1 = 0.0;     // along the face (x for S/N faces, y for W/E)
  double len() const { return u1 - u0; }
};

// A connected component of (grid cell) ∩ Ω.  Merging glues atoms together.
struct CellAtom {
  int cell = -1;                           // grid id of the hosting cell
  std::vector<Loop> loops;                 // outer first, holes after
  std::vector<ChainRef> chains;            // boundary-curve portions
  std::array<std::vector<FaceSeg>, 4> face_segs;  // fluid boundary on W,E,S,N faces
  double volume = 0.0;
  bool full_square = false;                // implicit full cell (no loops stored)
};

struct WallSeg {
  int side = 0;                  // 0=W,1=E,2=S,3=N wall of the rectangle
  double u0 = 0.0, u1 = 0.0;     // along the wall (y for W/E, x for S/N)
};

// A stored control volume: one cell's geometry, possibly a merged composite.
struct StoredCell {
  std::vector<CellAtom> atoms;   // constituents; atoms[0] hosts the key cell
  std::vector<WallSeg> walls;    // portions of S_i lying on the rectangle walls
  double volume = 0.0;
  bool has_chains = false;
};

struct CutCellSet {
  Grid grid;
  double theta = 0.0;

  std::vector<CellKind> kind;              // per grid cell (post-merge view)
  std::vector<double> volume;              // per grid cell: control-volume total
                                           // for stored keys, own for absorbed
  std::vector<std::int32_t> merge_target;  // absorbing key id, -1 if none

  std::vector<int> stored;                 // key ids, ascending
  std::unordered_map<int, StoredCell> geom;  // keys with explicit geometry;
                                             // plain pure cells are implicit

  // Fluid length of every grid face.  Vertical faces sit on line x_i and are
  // indexed by (i, j) with i in [0, nx], j in [0, ny); horizontal faces on
  // line y_j by (i, j) with i in [0, nx), j in [0, ny].
  std::vector<double> xface_len;
  std::vector<double> yface_len;

  int xface_id(int i, int j) const { return j * (grid.nx + 1) + i; }
  int yface_id(int i, int j) const { return j * grid.nx + i; }

  int resolve(int id) const {
    int t = merge_target[id];
    return t < 0 ? id : t;
  }
  bool is_pure(int i, int j) const {
    if (i < 0 || j < 0 || i >= grid.nx || j >= grid.ny) return false;
    return kind[grid.id(i, j)] == CellKind::pure;
  }
  const StoredCell* stored_geom(int key) const {
    auto it = geom.find(key);
    return it == geom.end() ? nullptr : &it->second;
  }
};

// Intersects one grid cell with the domain, returning its connected fluid
// components with closed oriented boundary loops.  Intended for testing and
// diagnostics; the full pipeline below amortizes the crossing computation.
std::vector<CellAtom> clip_cell(const Domain& dom, const Grid& grid, int i, int j);

// Full cut-cell generation: crossings, per-cell boundary loops, volumes,
// multi-component splitting, and small-cell merging down to min volume
// >= theta*h^2.  Throws TangencyError on degenerate curve/grid contact and
// MergeFailure when a small cell has no viable neighbor.
CutCellSet generate_cut_cells(const Domain& dom, double h, double theta);

struct Classification {
  std::vector<std::uint8_t> regular;  // per grid cell, 1 = regular
  std::vector<int> interface_cells;   // stored keys whose volume differs from h^2
  int n_regular = 0;                  // counts over stored control volumes
  int n_irregular = 0;
};

// A stored cell is regular iff every cell reached by the centered fourth
// order Laplacian offsets (0, ±1, ±2 along each axis) and the cross offsets
// ({±1, ±2} x {±1, ±2}) is pure; off-grid offsets count as not pure.
Classification classify_cells(const CutCellSet& cells);

// Diagnostic dump, one row per grid cell: i,j,kind,volume,merge_target.
void dump_cells_csv(const CutCellSet& cells, std::ostream& out);

}  // namespace cutfv

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cutfv {

// ---------------------------------------------------------------------------
// Error hierarchy.  The three top-level families map onto the CLI exit codes:
// SolverError -> 2, GeometryError -> 3, IoError -> 4.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeometryError : Error {
  using Error::Error;
};
struct UnsupportedGeometry : GeometryError {
  using GeometryError::GeometryError;
};
struct TangencyError : GeometryError {
  using GeometryError::GeometryError;
};
struct MergeFailure : GeometryError {
  using GeometryError::GeometryError;
};

struct SolverError : Error {
  using Error::Error;
};
struct InsufficientNodes : SolverError {
  using SolverError::SolverError;
};
struct PoisednessFailure : SolverError {
  using SolverError::SolverError;
};
struct SingularMatrix : SolverError {
  using SolverError::SolverError;
};
struct SingularNormalMatrix : SolverError {
  using SolverError::SolverError;
};
struct ZeroPivot : SolverError {
  using SolverError::SolverError;
};
struct NonConvergence : SolverError {
  using SolverError::SolverError;
};

struct IoError : Error {
  using Error::Error;
};
struct UnknownProblem : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Plane geometry primitives.
// ---------------------------------------------------------------------------

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double xx, double yy) : x(xx), y(yy) {}

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

/// Boundary condition applied on one boundary component: u = g (dirichlet),
/// n·∇u = g (neumann), or γ₁u + γ₂n·∇u = g (robin).
enum class BoundaryKind : std::uint8_t { dirichlet, neumann, robin };

/// Axis-aligned grid cell index.
struct CellIndex {
  int i = 0;
  int j = 0;
  bool operator==(const CellIndex&) const = default;
  bool operator<(const CellIndex& o) const {
    return j != o.j ? j < o.j : i < o.i;
  }
};

/// Uniform grid covering the rectangle [x0, x0+nx*h] x [y0, y0+ny*h].
struct Grid {
  double x0 = 0.0;
  double y0 = 0.0;
  double h = 1.0;
  int nx = 0;
  int ny = 0;

  int cell_count() const { return nx * ny; }
  int id(int i, int j) const { return j * nx + i; }
  int id(CellIndex c) const { return id(c.i, c.j); }
  CellIndex index(int cell_id) const { return {cell_id % nx, cell_id / nx}; }
  bool contains(int i, int j) const {
    return i >= 0 && i < nx && j >= 0 && j < ny;
  }
  Vec2 center(int i, int j) const {
    return {x0 + (i + 0.5) * h, y0 + (j + 0.5) * h};
  }
  Vec2 corner(int i, int j) const { return {x0 + i * h, y0 + j * h}; }
  Vec2 lo() const { return {x0, y0}; }
  Vec2 hi() const { return {x0 + nx * h, y0 + ny * h}; }
};

}  // namespace cutfv

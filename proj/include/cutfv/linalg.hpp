#pragma once

#include <span>
#include <vector>

#include "cutfv/common.hpp"

namespace cutfv::linalg {

// ---------------------------------------------------------------------------
// Dense matrices (row-major).  Dimensions in this code are small: sample
// matrices are 15x16, Schur complements a few dozen rows, the multigrid
// bottom solve a few hundred.  Straightforward kernels are all that is
// needed; no external solver package is linked.
// ---------------------------------------------------------------------------

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}

  static DenseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  DenseMatrix transposed() const;

  /// y = A x
  std::vector<double> apply(std::span<const double> x) const;
  /// y = A^T x
  std::vector<double> apply_transposed(std::span<const double> x) const;

  DenseMatrix operator*(const DenseMatrix& b) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

// ---------------------------------------------------------------------------
// Dense LU with partial pivoting.
// ---------------------------------------------------------------------------

struct LuFactor {
  DenseMatrix lu;          // combined L (unit diagonal) and U
  std::vector<int> perm;   // row permutation: row i of PA is row perm[i] of A
  int n = 0;
};

/// Factor a square matrix; throws SingularMatrix when a pivot column is
/// exactly zero or vanishes relative to the matrix scale (< 1e-300 absolute).
LuFactor lu_factor(DenseMatrix a);

std::vector<double> lu_solve(const LuFactor& f, std::span<const double> b);

/// Solve A^T x = b using a factorization of A.
std::vector<double> lu_solve_transposed(const LuFactor& f, std::span<const double> b);

// ---------------------------------------------------------------------------
// Compressed sparse row matrix; used for the discrete operator blocks.
// ---------------------------------------------------------------------------

struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> ptr;   // size rows+1
  std::vector<int> col;
  std::vector<double> val;

  /// Build from unsorted triplets; duplicate entries are summed, exact zeros
  /// kept out of the pattern.
  static SparseMatrix from_triplets(int rows, int cols,
                                    std::vector<int> ti, std::vector<int> tj,
                                    std::vector<double> tv);

  void apply(std::span<const double> x, std::span<double> y) const;          // y = A x
  void apply_add(std::span<const double> x, std::span<double> y, double s) const;  // y += s A x
  int nnz() const { return static_cast<int>(val.size()); }
};

// ---------------------------------------------------------------------------
// Banded LU without pivoting, bordered by a small dense block.
//
// The matrix is given in original numbering together with a set of border
// indices.  Internally rows/columns are permuted so the border sits last:
//     A = [ B  C ]     B: banded core, no pivoting
//         [ D  E ]     Schur complement S = E - D B^{-1} C, dense LU
// A zero pivot in the core raises ZeroPivot so the caller can fall back to a
// dense factorization.
// ---------------------------------------------------------------------------

struct BandedBorderedFactor {
  int n = 0;
  int core_n = 0;
  int band = 0;                    // half bandwidth of the core
  std::vector<int> to_internal;    // original index -> internal position
  std::vector<int> core_of;        // internal core position -> original index
  std::vector<int> border;         // original indices, sorted
  std::vector<double> core_lu;     // (2*band+1) x core_n band storage
  DenseMatrix y;                   // B^{-1} C   (core_n x m)
  DenseMatrix d;                   // D          (m x core_n)
  LuFactor schur;                  // LU of S    (m x m)
};

BandedBorderedFactor banded_bordered_factor(const SparseMatrix& a, int band,
                                            std::vector<int> border);

std::vector<double> banded_bordered_solve(const BandedBorderedFactor& f,
                                          std::span<const double> b);

// ---------------------------------------------------------------------------
// Constrained / weighted least squares.
// ---------------------------------------------------------------------------

/// Minimum-W^{-1}-norm solution of the underdetermined system A^T x = d:
/// minimizes sum_i x_i^2 / w[i] subject to the constraints, via
/// x = W A (A^T W A)^{-1} d with W = diag(w).  A is m x n with m >= n and
/// full column rank; throws SingularNormalMatrix otherwise.
std::vector<double> min_norm_solve(const DenseMatrix& a, std::span<const double> w,
                                   std::span<const double> d);

/// Weighted least squares: minimizes (Ax-b)^T W (Ax-b) with W = diag(w) via
/// the normal equations (A^T W A) x = A^T W b.  A is m x n with m >= n.
std::vector<double> weighted_ls_solve(const DenseMatrix& a, std::span<const double> w,
                                      std::span<const double> b);

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature on [-1, 1].
// ---------------------------------------------------------------------------

struct Quadrature {
  std::vector<double> node;
  std::vector<double> weight;
};

/// Nodes/weights for p-point Gauss-Legendre quadrature, exact for
/// polynomials of degree <= 2p-1.  Computed by Newton iteration on the
/// Legendre polynomial to 1e-15 and cached; p in [1, 32].
const Quadrature& gauss_legendre(int p);

// ---------------------------------------------------------------------------
// 2-norm condition number estimate for a square matrix: largest singular
// value by power iteration on A^T A, smallest by inverse iteration through an
// LU of A.  About two correct digits; returns +infinity when A is singular
// to working precision.
// ---------------------------------------------------------------------------

double condition_2norm_estimate(const DenseMatrix& a);

}  // namespace cutfv::linalg

#include "cutfv/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>

namespace cutfv::linalg {

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

std::vector<double> DenseMatrix::apply(std::span<const double> x) const {
  assert(static_cast<int>(x.size()) == cols_);
  std::vector<double> y(rows_, 0.0);
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    const double* row = &a_[static_cast<size_t>(i) * cols_];
    for (int j = 0; j < cols_; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> DenseMatrix::apply_transposed(std::span<const double> x) const {
  assert(static_cast<int>(x.size()) == rows_);
  std::vector<double> y(cols_, 0.0);
  for (int i = 0; i < rows_; ++i) {
    const double* row = &a_[static_cast<size_t>(i) * cols_];
    for (int j = 0; j < cols_; ++j) y[j] += row[j] * x[i];
  }
  return y;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& b) const {
  assert(cols_ == b.rows_);
  DenseMatrix c(rows_, b.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      double aik = (*this)(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// ---------------------------------------------------------------------------
// Dense LU
// ---------------------------------------------------------------------------

LuFactor lu_factor(DenseMatrix a) {
  if (a.rows() != a.cols()) throw SingularMatrix("lu_factor: matrix not square");
  const int n = a.rows();
  LuFactor f;
  f.n = n;
  f.perm.resize(n);
  std::iota(f.perm.begin(), f.perm.end(), 0);

  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
  if (scale == 0.0) throw SingularMatrix("lu_factor: zero matrix");

  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(a(k, k));
    for (int i = k + 1; i < n; ++i) {
      double v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best <= scale * 1e-300)
      throw SingularMatrix("lu_factor: singular to working precision");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    const double inv = 1.0 / a(k, k);
    for (int i = k + 1; i < n; ++i) {
      double l = a(i, k) * inv;
      a(i, k) = l;
      if (l == 0.0) continue;
      for (int j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
    }
  }
  f.lu = std::move(a);
  return f;
}

std::vector<double> lu_solve(const LuFactor& f, std::span<const double> b) {
  const int n = f.n;
  assert(static_cast<int>(b.size()) == n);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (int i = 1; i < n; ++i) {
    double s = x[i];
    for (int j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[j];
    x[i] = s / f.lu(i, i);
  }
  return x;
}

std::vector<double> lu_solve_transposed(const LuFactor& f, std::span<const double> b) {
  // PA = LU  =>  A^T P^T = U^T L^T; solve U^T z = b, L^T w = z, x = P^T w.
  const int n = f.n;
  assert(static_cast<int>(b.size()) == n);
  std::vector<double> z(b.begin(), b.end());
  for (int i = 0; i < n; ++i) {
    double s = z[i];
    for (int j = 0; j < i; ++j) s -= f.lu(j, i) * z[j];
    z[i] = s / f.lu(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = z[i];
    for (int j = i + 1; j < n; ++j) s -= f.lu(j, i) * z[j];
    z[i] = s;
  }
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[f.perm[i]] = z[i];
  return x;
}

// ---------------------------------------------------------------------------
// Sparse CSR
// ---------------------------------------------------------------------------

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<int> ti,
                                         std::vector<int> tj, std::vector<double> tv) {
  assert(ti.size() == tj.size() && tj.size() == tv.size());
  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  std::vector<size_t> order(ti.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (ti[a] != ti[b]) return ti[a] < ti[b];
    return tj[a] < tj[b];
  });
  m.ptr.assign(rows + 1, 0);
  for (size_t idx = 0; idx < order.size();) {
    size_t k = order[idx];
    int r = ti[k], c = tj[k];
    double v = 0.0;
    while (idx < order.size() && ti[order[idx]] == r && tj[order[idx]] == c)
      v += tv[order[idx++]];
    if (v != 0.0) {
      m.col.push_back(c);
      m.val.push_back(v);
      ++m.ptr[r + 1];
    }
  }
  for (int r = 0; r < rows; ++r) m.ptr[r + 1] += m.ptr[r];
  return m;
}

void SparseMatrix::apply(std::span<const double> x, std::span<double> y) const {
  assert(static_cast<int>(x.size()) == cols && static_cast<int>(y.size()) == rows);
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int k = ptr[r]; k < ptr[r + 1]; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

void SparseMatrix::apply_add(std::span<const double> x, std::span<double> y, double s) const {
  assert(static_cast<int>(x.size()) == cols && static_cast<int>(y.size()) == rows);
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int k = ptr[r]; k < ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
    y[r] += s * acc;
  }
}

// ---------------------------------------------------------------------------
// Banded + bordered LU
// ---------------------------------------------------------------------------

namespace {

// Band storage: entry (i, j) of the core with |i-j| <= band lives at
// band_data[(j - i + band) * core_n + i].
inline double& band_at(std::vector<double>& data, int band, int core_n, int i, int j) {
  return data[static_cast<size_t>(j - i + band) * core_n + i];
}
inline double band_get(const std::vector<double>& data, int band, int core_n, int i, int j) {
  if (std::abs(i - j) > band) return 0.0;
  return data[static_cast<size_t>(j - i + band) * core_n + i];
}

void band_solve(const std::vector<double>& lu, int band, int core_n,
                std::span<double> x) {
  for (int i = 0; i < core_n; ++i) {
    double s = x[i];
    int j0 = std::max(0, i - band);
    for (int j = j0; j < i; ++j) s -= band_get(lu, band, core_n, i, j) * x[j];
    x[i] = s;
  }
  for (int i = core_n - 1; i >= 0; --i) {
    double s = x[i];
    int j1 = std::min(core_n - 1, i + band);
    for (int j = i + 1; j <= j1; ++j) s -= band_get(lu, band, core_n, i, j) * x[j];
    x[i] = s / band_get(lu, band, core_n, i, i);
  }
}

}  // namespace

BandedBorderedFactor banded_bordered_factor(const SparseMatrix& a, int band,
                                            std::vector<int> border) {
  assert(a.rows == a.cols);
  const int n = a.rows;
  std::sort(border.begin(), border.end());
  border.erase(std::unique(border.begin(), border.end()), border.end());
  const int m = static_cast<int>(border.size());
  const int core_n = n - m;

  BandedBorderedFactor f;
  f.n = n;
  f.core_n = core_n;
  f.band = band;
  f.border = border;
  f.to_internal.assign(n, -1);
  f.core_of.resize(core_n);
  {
    int pos = 0;
    size_t bp = 0;
    for (int i = 0; i < n; ++i) {
      if (bp < border.size() && border[bp] == i) {
        f.to_internal[i] = core_n + static_cast<int>(bp);
        ++bp;
      } else {
        f.to_internal[i] = pos;
        f.core_of[pos] = i;
        ++pos;
      }
    }
  }

  std::vector<double> core(static_cast<size_t>(2 * band + 1) * std::max(core_n, 1), 0.0);
  DenseMatrix c(core_n, m), d(m, core_n), e(m, m);

  for (int r = 0; r < n; ++r) {
    int ri = f.to_internal[r];
    for (int k = a.ptr[r]; k < a.ptr[r + 1]; ++k) {
      int ci = f.to_internal[a.col[k]];
      double v = a.val[k];
      if (ri < core_n && ci < core_n) {
        if (std::abs(ri - ci) > band)
          throw Error("banded_bordered_factor: entry outside declared band");
        band_at(core, band, core_n, ri, ci) = v;
      } else if (ri < core_n) {
        c(ri, ci - core_n) = v;
      } else if (ci < core_n) {
        d(ri - core_n, ci) = v;
      } else {
        e(ri - core_n, ci - core_n) = v;
      }
    }
  }

  double scale = 0.0;
  for (double v : core) scale = std::max(scale, std::abs(v));

  // LU of the banded core, no pivoting.
  for (int k = 0; k < core_n; ++k) {
    double piv = band_get(core, band, core_n, k, k);
    if (std::abs(piv) <= scale * 1e-14)
      throw ZeroPivot("banded_bordered_factor: zero pivot at core row " + std::to_string(k));
    int i1 = std::min(core_n - 1, k + band);
    for (int i = k + 1; i <= i1; ++i) {
      double l = band_get(core, band, core_n, i, k) / piv;
      band_at(core, band, core_n, i, k) = l;
      if (l == 0.0) continue;
      int j1 = std::min(core_n - 1, k + band);
      for (int j = k + 1; j <= j1; ++j)
        band_at(core, band, core_n, i, j) -= l * band_get(core, band, core_n, k, j);
    }
  }
  f.core_lu = std::move(core);

  // Y = B^{-1} C, one banded solve per border column.
  f.y = DenseMatrix(core_n, m);
  std::vector<double> colbuf(core_n);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < core_n; ++i) colbuf[i] = c(i, j);
    band_solve(f.core_lu, band, core_n, colbuf);
    for (int i = 0; i < core_n; ++i) f.y(i, j) = colbuf[i];
  }

  // Schur complement S = E - D Y.
  DenseMatrix s = e;
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < core_n; ++k) {
      double dv = d(i, k);
      if (dv == 0.0) continue;
      for (int j = 0; j < m; ++j) s(i, j) -= dv * f.y(k, j);
    }
  f.d = std::move(d);
  if (m > 0) f.schur = lu_factor(std::move(s));
  return f;
}

std::vector<double> banded_bordered_solve(const BandedBorderedFactor& f,
                                          std::span<const double> b) {
  const int n = f.n, core_n = f.core_n;
  const int m = n - core_n;
  assert(static_cast<int>(b.size()) == n);

  std::vector<double> b1(core_n), b2(m);
  for (int i = 0; i < n; ++i) {
    int ii = f.to_internal[i];
    if (ii < core_n)
      b1[ii] = b[i];
    else
      b2[ii - core_n] = b[i];
  }

  band_solve(f.core_lu, f.band, core_n, b1);  // b1 = B^{-1} b1

  std::vector<double> x(n);
  if (m > 0) {
    std::vector<double> rhs2(m);
    for (int i = 0; i < m; ++i) {
      double s = b2[i];
      for (int k = 0; k < core_n; ++k) s -= f.d(i, k) * b1[k];
      rhs2[i] = s;
    }
    std::vector<double> x2 = lu_solve(f.schur, rhs2);
    for (int i = 0; i < core_n; ++i) {
      double s = b1[i];
      for (int j = 0; j < m; ++j) s -= f.y(i, j) * x2[j];
      x[f.core_of[i]] = s;
    }
    for (int j = 0; j < m; ++j) x[f.border[j]] = x2[j];
  } else {
    for (int i = 0; i < core_n; ++i) x[f.core_of[i]] = b1[i];
  }
  return x;
}

// ---------------------------------------------------------------------------
// Constrained / weighted least squares
// ---------------------------------------------------------------------------

std::vector<double> min_norm_solve(const DenseMatrix& a, std::span<const double> w,
                                   std::span<const double> d) {
  const int m = a.rows(), n = a.cols();
  assert(static_cast<int>(w.size()) == m);
  assert(static_cast<int>(d.size()) == n);
  if (m < n) throw SingularNormalMatrix("min_norm_solve: fewer rows than constraints");

  // G = A^T W A
  DenseMatrix g(n, n);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < n; ++i) {
      double aw = a(k, i) * w[k];
      if (aw == 0.0) continue;
      for (int j = 0; j < n; ++j) g(i, j) += aw * a(k, j);
    }
  LuFactor f;
  try {
    f = lu_factor(std::move(g));
  } catch (const SingularMatrix&) {
    throw SingularNormalMatrix("min_norm_solve: A^T W A singular");
  }
  std::vector<double> lambda = lu_solve(f, d);
  std::vector<double> x(m);
  for (int k = 0; k < m; ++k) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += a(k, j) * lambda[j];
    x[k] = w[k] * s;
  }

  // The normal matrix squares the conditioning of A, so the raw solve can
  // leave a constraint residual several orders above roundoff.  Refine on the
  // constraint A^T x = d (corrections stay in range(W A), preserving the
  // minimal-norm character) until the residual stops improving.
  double dmax = 0.0;
  for (int j = 0; j < n; ++j) dmax = std::max(dmax, std::abs(d[j]));
  for (int pass = 0; pass < 3; ++pass) {
    std::vector<double> r(n);
    double rmax = 0.0;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += a(k, j) * x[k];
      r[j] = d[j] - s;
      rmax = std::max(rmax, std::abs(r[j]));
    }
    if (rmax <= 4e-16 * (1.0 + dmax)) break;
    std::vector<double> dl = lu_solve(f, r);
    for (int k = 0; k < m; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += a(k, j) * dl[j];
      x[k] += w[k] * s;
    }
  }
  return x;
}

std::vector<double> weighted_ls_solve(const DenseMatrix& a, std::span<const double> w,
                                      std::span<const double> b) {
  const int m = a.rows(), n = a.cols();
  assert(static_cast<int>(w.size()) == m);
  assert(static_cast<int>(b.size()) == m);
  if (m < n) throw SingularNormalMatrix("weighted_ls_solve: underdetermined system");

  DenseMatrix g(n, n);
  std::vector<double> rhs(n, 0.0);
  for (int k = 0; k < m; ++k) {
    double wk = w[k];
    for (int i = 0; i < n; ++i) {
      double aw = a(k, i) * wk;
      if (aw == 0.0) continue;
      rhs[i] += aw * b[k];
      for (int j = 0; j < n; ++j) g(i, j) += aw * a(k, j);
    }
  }
  LuFactor f;
  try {
    f = lu_factor(std::move(g));
  } catch (const SingularMatrix&) {
    throw SingularNormalMatrix("weighted_ls_solve: normal matrix singular");
  }
  std::vector<double> x = lu_solve(f, rhs);

  // Refinement against the normal equations, with the residual accumulated
  // through A so G is never reformed (same motivation as in min_norm_solve).
  for (int pass = 0; pass < 3; ++pass) {
    std::vector<double> r(n, 0.0);
    for (int k = 0; k < m; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += a(k, j) * x[j];
      double e = w[k] * (b[k] - s);
      if (e == 0.0) continue;
      for (int i = 0; i < n; ++i) r[i] += a(k, i) * e;
    }
    double rmax = 0.0, smax = 0.0;
    for (int i = 0; i < n; ++i) rmax = std::max(rmax, std::abs(r[i]));
    for (int i = 0; i < n; ++i) smax = std::max(smax, std::abs(rhs[i]));
    if (rmax <= 4e-16 * (1.0 + smax)) break;
    std::vector<double> dx = lu_solve(f, r);
    for (int i = 0; i < n; ++i) x[i] += dx[i];
  }
  return x;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre
// ---------------------------------------------------------------------------

namespace {

Quadrature compute_gauss_legendre(int p) {
  Quadrature q;
  q.node.resize(p);
  q.weight.resize(p);
  for (int i = 0; i < p; ++i) {
    // Chebyshev-like initial guess for the i-th root (descending order).
    double x = std::cos(M_PI * (i + 0.75) / (p + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_p(x) and P'_p(x) by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= p; ++k) {
        double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = p * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // Recompute derivative at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= p; ++k) {
      double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = p * (x * p1 - p0) / (x * x - 1.0);
    q.node[i] = x;
    q.weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  // Ascending nodes; enforce exact symmetry.
  std::reverse(q.node.begin(), q.node.end());
  std::reverse(q.weight.begin(), q.weight.end());
  for (int i = 0; i < p / 2; ++i) {
    double xm = 0.5 * (q.node[p - 1 - i] - q.node[i]);
    q.node[i] = -xm;
    q.node[p - 1 - i] = xm;
    double wm = 0.5 * (q.weight[i] + q.weight[p - 1 - i]);
    q.weight[i] = q.weight[p - 1 - i] = wm;
  }
  if (p % 2 == 1) q.node[p / 2] = 0.0;
  return q;
}

}  // namespace

const Quadrature& gauss_legendre(int p) {
  if (p < 1 || p > 32) throw Error("gauss_legendre: order out of range [1,32]");
  static std::vector<Quadrature> cache(33);
  if (cache[p].node.empty()) cache[p] = compute_gauss_legendre(p);
  return cache[p];
}

// ---------------------------------------------------------------------------
// Condition estimate
// ---------------------------------------------------------------------------

double condition_2norm_estimate(const DenseMatrix& a) {
  assert(a.rows() == a.cols());
  const int n = a.rows();
  if (n == 0) return 1.0;
  if (n == 1) {
    double v = std::abs(a(0, 0));
    return v == 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }

  // Deterministic start vector with no special structure.
  auto seed_vector = [n]() {
    std::vector<double> v(n);
    uint64_t s = 0x9e3779b97f4a7c15ull;
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      s = s * 6364136223846793005ull + 1442695040888963407ull;
      v[i] = 0.5 + static_cast<double>((s >> 11) & 0xffff) / 131072.0;
      norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
  };

  auto normalize = [](std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    if (s > 0.0)
      for (double& x : v) x /= s;
    return s;
  };

  // sigma_max: power iteration on A^T A.
  std::vector<double> v = seed_vector();
  double smax = 0.0;
  for (int it = 0; it < 200; ++it) {
    std::vector<double> av = a.apply(v);
    std::vector<double> atav = a.apply_transposed(av);
    double lam = normalize(atav);
    v = std::move(atav);
    double s = std::sqrt(lam);
    if (it > 2 && std::abs(s - smax) <= 1e-3 * s) {
      smax = s;
      break;
    }
    smax = s;
  }
  if (smax == 0.0) return std::numeric_limits<double>::infinity();

  // sigma_min: inverse iteration on (A^T A)^{-1} via a single LU of A.
  LuFactor f;
  try {
    f = lu_factor(a);
  } catch (const SingularMatrix&) {
    return std::numeric_limits<double>::infinity();
  }
  v = seed_vector();
  double smin = 0.0;
  for (int it = 0; it < 200; ++it) {
    std::vector<double> w1 = lu_solve(f, v);            // A^{-1} v
    std::vector<double> w2 = lu_solve_transposed(f, w1);  // A^{-T} A^{-1} v
    double lam = normalize(w2);
    v = std::move(w2);
    if (!std::isfinite(lam) || lam == 0.0)
      return std::numeric_limits<double>::infinity();
    double s = 1.0 / std::sqrt(lam);
    if (it > 2 && std::abs(s - smin) <= 1e-3 * std::max(s, 1e-300)) {
      smin = s;
      break;
    }
    smin = s;
  }
  if (smin <= 0.0 || !std::isfinite(smin))
    return std::numeric_limits<double>::infinity();
  return smax / smin;
}

}  // namespace cutfv::linalg

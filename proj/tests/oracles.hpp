// Independent reference implementations used only by the test suite.  These
// deliberately avoid the library's own kernels so that each check compares
// two different computational routes.
#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;  // row-major dense

inline Mat zeros(int r, int c) { return Mat(r, std::vector<double>(c, 0.0)); }

// Gauss-Jordan elimination with full pivoting; returns x solving M x = b.
inline std::vector<double> gauss_solve(Mat m, std::vector<double> b) {
  const int n = static_cast<int>(m.size());
  std::vector<int> colperm(n);
  for (int i = 0; i < n; ++i) colperm[i] = i;
  for (int k = 0; k < n; ++k) {
    int pr = k, pc = k;
    double best = 0.0;
    for (int i = k; i < n; ++i)
      for (int j = k; j < n; ++j)
        if (std::abs(m[i][j]) > best) {
          best = std::abs(m[i][j]);
          pr = i;
          pc = j;
        }
    assert(best > 0.0 && "oracle::gauss_solve: singular matrix");
    std::swap(m[k], m[pr]);
    std::swap(b[k], b[pr]);
    if (pc != k) {
      for (int i = 0; i < n; ++i) std::swap(m[i][k], m[i][pc]);
      std::swap(colperm[k], colperm[pc]);
    }
    double piv = m[k][k];
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      double f = m[i][k] / piv;
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) m[i][j] -= f * m[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) x[colperm[k]] = b[k] / m[k][k];
  return x;
}

// Thomas algorithm for a tridiagonal system (lower, diag, upper).
inline std::vector<double> thomas_solve(std::vector<double> lo, std::vector<double> di,
                                        std::vector<double> up, std::vector<double> b) {
  const int n = static_cast<int>(di.size());
  for (int i = 1; i < n; ++i) {
    double w = lo[i] / di[i - 1];
    di[i] -= w * up[i - 1];
    b[i] -= w * b[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = b[n - 1] / di[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (b[i] - up[i] * x[i + 1]) / di[i];
  return x;
}

// Minimum-weighted-norm solution via the explicit KKT system
//   [ W^{-1}  A ] [x     ]   [0]
//   [ A^T     0 ] [lambda] = [d],
// solved by Gauss-Jordan.  Minimizes sum x_i^2 / w_i subject to A^T x = d.
inline std::vector<double> kkt_min_norm(const Mat& a, const std::vector<double>& w,
                                        const std::vector<double>& d) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(a[0].size());
  Mat k = zeros(m + n, m + n);
  std::vector<double> rhs(m + n, 0.0);
  for (int i = 0; i < m; ++i) k[i][i] = 1.0 / w[i];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      k[i][m + j] = -a[i][j];
      k[m + j][i] = a[i][j];
    }
  for (int j = 0; j < n; ++j) rhs[m + j] = d[j];
  std::vector<double> sol = gauss_solve(k, rhs);
  return std::vector<double>(sol.begin(), sol.begin() + m);
}

// Weighted least squares via explicitly formed normal equations.
inline std::vector<double> normal_eq_ls(const Mat& a, const std::vector<double>& w,
                                        const std::vector<double>& b) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(a[0].size());
  Mat g = zeros(n, n);
  std::vector<double> rhs(n, 0.0);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < n; ++i) {
      rhs[i] += a[k][i] * w[k] * b[k];
      for (int j = 0; j < n; ++j) g[i][j] += a[k][i] * w[k] * a[k][j];
    }
  return gauss_solve(g, rhs);
}

// Singular values by one-sided Jacobi rotations, descending order.
inline std::vector<double> jacobi_singular_values(Mat a) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(a[0].size());
  assert(m >= n);
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < m; ++i) {
          app += a[i][p] * a[i][p];
          aqq += a[i][q] * a[i][q];
          apq += a[i][p] * a[i][q];
        }
        off = std::max(off, std::abs(apq) / std::sqrt(app * aqq + 1e-300));
        if (std::abs(apq) < 1e-30) continue;
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (int i = 0; i < m; ++i) {
          double vp = a[i][p], vq = a[i][q];
          a[i][p] = c * vp - s * vq;
          a[i][q] = s * vp + c * vq;
        }
      }
    if (off < 1e-14) break;
  }
  std::vector<double> sv(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += a[i][j] * a[i][j];
    sv[j] = std::sqrt(s);
  }
  std::sort(sv.rbegin(), sv.rend());
  return sv;
}

// Exact moment of x^a y^b over a triangle, by mapping to the reference
// triangle and expanding the affine images with the binomial theorem.
// integral over T of x^a y^b dA where T has vertices v0, v1, v2.
inline double triangle_monomial_moment(double x0, double y0, double x1, double y1,
                                       double x2, double y2, int a, int b) {
  // x = x0 + u*(x1-x0) + v*(x2-x0), same for y; Jacobian = 2*Area.
  double jac = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
  double ex = x1 - x0, fx = x2 - x0, ey = y1 - y0, fy = y2 - y0;
  auto binom = [](int nn, int kk) {
    double r = 1.0;
    for (int t = 1; t <= kk; ++t) r = r * (nn - kk + t) / t;
    return r;
  };
  // Expand (x0 + e u + f v)^a = sum over i+j+k=a multinomial x0^i (e u)^j (f v)^k.
  // integral over reference triangle of u^p v^q du dv = p! q! / (p+q+2)!.
  auto ref_moment = [](int p, int q) {
    double num = 1.0;
    for (int t = 1; t <= p; ++t) num *= t;
    for (int t = 1; t <= q; ++t) num *= t;
    double den = 1.0;
    for (int t = 1; t <= p + q + 2; ++t) den *= t;
    return num / den;
  };
  double total = 0.0;
  for (int j1 = 0; j1 <= a; ++j1)
    for (int k1 = 0; j1 + k1 <= a; ++k1) {
      int i1 = a - j1 - k1;
      double ca = binom(a, j1) * binom(a - j1, k1) * std::pow(x0, i1) *
                  std::pow(ex, j1) * std::pow(fx, k1);
      for (int j2 = 0; j2 <= b; ++j2)
        for (int k2 = 0; j2 + k2 <= b; ++k2) {
          int i2 = b - j2 - k2;
          double cb = binom(b, j2) * binom(b - j2, k2) * std::pow(y0, i2) *
                      std::pow(ey, j2) * std::pow(fy, k2);
          total += ca * cb * ref_moment(j1 + j2, k1 + k2);
        }
    }
  return total * jac;  // signed; vertices in CCW order give positive area
}

// Exact moment of x^a y^b over a simple polygon (CCW vertex list), by fanning
// into triangles from the first vertex.
inline double polygon_monomial_moment(const std::vector<std::pair<double, double>>& v,
                                      int a, int b) {
  double total = 0.0;
  for (size_t k = 1; k + 1 < v.size(); ++k)
    total += triangle_monomial_moment(v[0].first, v[0].second, v[k].first, v[k].second,
                                      v[k + 1].first, v[k + 1].second, a, b);
  return total;
}

}  // namespace oracle

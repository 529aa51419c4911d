#include <doctest.h>

#include <cmath>
#include <random>

#include "cutfv/linalg.hpp"
#include "oracles.hpp"

using namespace cutfv;
using linalg::DenseMatrix;

namespace {

DenseMatrix from_oracle(const oracle::Mat& m) {
  DenseMatrix a(static_cast<int>(m.size()), static_cast<int>(m[0].size()));
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) a(i, j) = m[i][j];
  return a;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

// ===========================================================================
// Gauss-Legendre quadrature
// ===========================================================================

TEST_CASE("gauss_legendre small orders") {
  const auto& q1 = linalg::gauss_legendre(1);
  CHECK(q1.node[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(q1.weight[0] == doctest::Approx(2.0).epsilon(1e-15));

  const auto& q2 = linalg::gauss_legendre(2);
  CHECK(q2.node[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(q2.node[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(q2.weight[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gauss_legendre x^10 with 6 points") {
  const auto& q = linalg::gauss_legendre(6);
  double s = 0.0;
  for (size_t i = 0; i < q.node.size(); ++i) s += q.weight[i] * std::pow(q.node[i], 10);
  CHECK(std::abs(s - 2.0 / 11.0) < 1e-14);
}

TEST_CASE("gauss_legendre degree exactness sweep") {
  for (int p = 1; p <= 16; ++p) {
    const auto& q = linalg::gauss_legendre(p);
    double wsum = 0.0;
    for (double w : q.weight) wsum += w;
    CHECK(std::abs(wsum - 2.0) < 1e-14);
    for (int deg = 0; deg <= 2 * p - 1; ++deg) {
      double s = 0.0;
      for (size_t i = 0; i < q.node.size(); ++i)
        s += q.weight[i] * std::pow(q.node[i], deg);
      double exact = (deg % 2 == 1) ? 0.0 : 2.0 / (deg + 1);
      CHECK(std::abs(s - exact) < 2e-14 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("gauss_legendre node symmetry at p=32") {
  const auto& q = linalg::gauss_legendre(32);
  for (int i = 0; i < 16; ++i) {
    CHECK(q.node[i] == -q.node[31 - i]);
    CHECK(q.weight[i] == q.weight[31 - i]);
  }
}

// ===========================================================================
// Dense LU
// ===========================================================================

TEST_CASE("lu_factor identity and 2x2") {
  auto f = linalg::lu_factor(DenseMatrix::identity(4));
  std::vector<double> b{1, 2, 3, 4};
  CHECK(max_abs_diff(linalg::lu_solve(f, b), b) == 0.0);

  DenseMatrix a(2, 2);
  a(0, 0) = 2;
  a(0, 1) = 1;
  a(1, 0) = 1;
  a(1, 1) = 3;
  auto f2 = linalg::lu_factor(a);
  auto x = linalg::lu_solve(f2, std::vector<double>{3, 4});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("lu random 50x50 against known solution") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 50;
  DenseMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = u(rng);
    a(i, i) += 4.0;  // keep comfortably nonsingular
  }
  std::vector<double> xref(n);
  for (int i = 0; i < n; ++i) xref[i] = u(rng);
  auto b = a.apply(xref);
  auto f = linalg::lu_factor(a);
  CHECK(max_abs_diff(linalg::lu_solve(f, b), xref) < 1e-10);

  // Transposed solve consistency: A^T y = b.
  auto bt = a.apply_transposed(xref);
  CHECK(max_abs_diff(linalg::lu_solve_transposed(f, bt), xref) < 1e-10);
}

TEST_CASE("lu_factor rejects singular input") {
  DenseMatrix a(3, 3);
  a(0, 0) = 1;
  a(0, 1) = 2;
  a(0, 2) = 3;
  for (int j = 0; j < 3; ++j) {
    a(1, j) = 2 * a(0, j);
    a(2, j) = -a(0, j);
  }
  CHECK_THROWS_AS(linalg::lu_factor(a), SingularMatrix);
}

// ===========================================================================
// Banded + bordered LU
// ===========================================================================

TEST_CASE("banded tridiagonal against Thomas oracle") {
  const int n = 100;
  std::vector<double> lo(n), di(n), up(n), b(n);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<int> ti, tj;
  std::vector<double> tv;
  for (int i = 0; i < n; ++i) {
    di[i] = 4.0 + u(rng);
    b[i] = u(rng) - 0.5;
    ti.push_back(i);
    tj.push_back(i);
    tv.push_back(di[i]);
    if (i > 0) {
      lo[i] = -u(rng);
      ti.push_back(i);
      tj.push_back(i - 1);
      tv.push_back(lo[i]);
    }
    if (i < n - 1) {
      up[i] = -u(rng);
      ti.push_back(i);
      tj.push_back(i + 1);
      tv.push_back(up[i]);
    }
  }
  auto a = linalg::SparseMatrix::from_triplets(n, n, ti, tj, tv);
  auto f = linalg::banded_bordered_factor(a, 1, {});
  auto x = linalg::banded_bordered_solve(f, b);
  auto xref = oracle::thomas_solve(lo, di, up, b);
  CHECK(max_abs_diff(x, xref) < 1e-12);
}

TEST_CASE("banded core with corner blocks against dense oracle") {
  // Cyclically banded matrix: band 7 linear entries plus wrap-around entries
  // that live in the 5x5 corners once the trailing 5 indices are bordered.
  const int n = 60, band = 7, corner = 5;
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  oracle::Mat dense = oracle::zeros(n, n);
  std::vector<int> ti, tj;
  std::vector<double> tv;
  auto put = [&](int i, int j, double v) {
    dense[i][j] += v;
    ti.push_back(i);
    tj.push_back(j);
    tv.push_back(v);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - band); j <= std::min(n - 1, i + band); ++j)
      put(i, j, i == j ? 20.0 + u(rng) : u(rng));
  }
  for (int i = 0; i < corner; ++i)
    for (int j = n - corner; j < n; ++j) {
      put(i, j, u(rng));
      put(j, i, u(rng));
    }
  auto a = linalg::SparseMatrix::from_triplets(n, n, ti, tj, tv);
  std::vector<int> border(corner);
  for (int k = 0; k < corner; ++k) border[k] = n - corner + k;
  auto f = linalg::banded_bordered_factor(a, band, border);

  std::vector<double> b(n);
  for (int i = 0; i < n; ++i) b[i] = u(rng);
  auto x = linalg::banded_bordered_solve(f, b);
  auto xref = oracle::gauss_solve(dense, b);
  CHECK(max_abs_diff(x, xref) < 1e-10);
}

TEST_CASE("banded bordered 3x3 corners n=40") {
  const int n = 40, band = 3, corner = 3;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  oracle::Mat dense = oracle::zeros(n, n);
  std::vector<int> ti, tj;
  std::vector<double> tv;
  auto put = [&](int i, int j, double v) {
    dense[i][j] += v;
    ti.push_back(i);
    tj.push_back(j);
    tv.push_back(v);
  };
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - band); j <= std::min(n - 1, i + band); ++j)
      put(i, j, i == j ? 10.0 + u(rng) : u(rng));
  for (int i = 0; i < corner; ++i)
    for (int j = n - corner; j < n; ++j) {
      put(i, j, u(rng));
      put(j, i, u(rng));
    }
  std::vector<int> border{n - 3, n - 2, n - 1};
  auto a = linalg::SparseMatrix::from_triplets(n, n, ti, tj, tv);
  auto f = linalg::banded_bordered_factor(a, band, border);
  std::vector<double> b(n);
  for (int i = 0; i < n; ++i) b[i] = u(rng);
  CHECK(max_abs_diff(linalg::banded_bordered_solve(f, b), oracle::gauss_solve(dense, b)) <
        1e-10);
}

TEST_CASE("banded n=1 and zero pivot") {
  auto a = linalg::SparseMatrix::from_triplets(1, 1, {0}, {0}, {2.5});
  auto f = linalg::banded_bordered_factor(a, 0, {});
  auto x = linalg::banded_bordered_solve(f, std::vector<double>{5.0});
  CHECK(x[0] == doctest::Approx(2.0));

  // First pivot exactly zero and no pivoting available -> ZeroPivot.
  auto bad = linalg::SparseMatrix::from_triplets(2, 2, {0, 1, 1}, {1, 0, 1}, {1.0, 1.0, 1.0});
  CHECK_THROWS_AS(linalg::banded_bordered_factor(bad, 1, {}), ZeroPivot);
}

// ===========================================================================
// Min-norm and weighted least squares
// ===========================================================================

TEST_CASE("min_norm_solve pinned examples") {
  // Constraints A^T x = d with A = (1,1)^T, d = 1.
  DenseMatrix a(2, 1);
  a(0, 0) = 1;
  a(1, 0) = 1;
  std::vector<double> d{1.0};

  auto x = linalg::min_norm_solve(a, std::vector<double>{1.0, 1.0}, d);
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-14));

  auto x2 = linalg::min_norm_solve(a, std::vector<double>{1.0, 1.0 / 3.0}, d);
  CHECK(x2[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(x2[1] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("min_norm_solve against KKT oracle") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  oracle::Mat am = oracle::zeros(6, 3);
  for (auto& row : am)
    for (auto& v : row) v = u(rng);
  std::vector<double> w{1.0, 0.5, 2.0, 1.5, 0.25, 3.0};
  std::vector<double> d{1.0, -2.0, 0.5};
  auto x = linalg::min_norm_solve(from_oracle(am), w, d);
  auto xref = oracle::kkt_min_norm(am, w, d);
  CHECK(max_abs_diff(x, xref) < 1e-12);

  // Constraint satisfaction.
  for (int j = 0; j < 3; ++j) {
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += am[i][j] * x[i];
    CHECK(std::abs(s - d[j]) < 1e-12);
  }
}

TEST_CASE("weighted_ls_solve square and overdetermined") {
  DenseMatrix a(2, 2);
  a(0, 0) = 2;
  a(0, 1) = 0;
  a(1, 0) = 0;
  a(1, 1) = 4;
  auto x = linalg::weighted_ls_solve(a, std::vector<double>{1.0, 1.0},
                                     std::vector<double>{2.0, 8.0});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-14));

  // Consistent overdetermined system is solved exactly regardless of weights.
  DenseMatrix b(4, 2);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> xref{0.7, -1.3};
  std::vector<double> rhs(4);
  for (int i = 0; i < 4; ++i) {
    b(i, 0) = u(rng);
    b(i, 1) = u(rng);
    rhs[i] = b(i, 0) * xref[0] + b(i, 1) * xref[1];
  }
  auto x2 = linalg::weighted_ls_solve(b, std::vector<double>{1, 2, 3, 4}, rhs);
  CHECK(max_abs_diff(x2, xref) < 1e-12);
}

TEST_CASE("weighted_ls_solve residual orthogonality") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  oracle::Mat am = oracle::zeros(8, 3);
  for (auto& row : am)
    for (auto& v : row) v = u(rng);
  std::vector<double> w(8), b(8);
  for (int i = 0; i < 8; ++i) {
    w[i] = 0.5 + std::abs(u(rng));
    b[i] = u(rng);
  }
  auto x = linalg::weighted_ls_solve(from_oracle(am), w, b);
  CHECK(max_abs_diff(x, oracle::normal_eq_ls(am, w, b)) < 1e-12);
  // A^T W r = 0 at the minimizer.
  for (int j = 0; j < 3; ++j) {
    double s = 0.0;
    for (int i = 0; i < 8; ++i) {
      double r = b[i];
      for (int k = 0; k < 3; ++k) r -= am[i][k] * x[k];
      s += am[i][j] * w[i] * r;
    }
    CHECK(std::abs(s) < 1e-12);
  }
}

// ===========================================================================
// Randomized solver validation: 1000 instances against the independent
// KKT / normal-equation oracles.
// ===========================================================================

TEST_CASE("randomized min-norm and weighted-ls validation") {
  std::mt19937 rng(424242);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> mdist(3, 12);
  double worst_mn = 0.0, worst_ls = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    int m = mdist(rng);
    int n = 1 + (trial % std::min(m, 5));
    oracle::Mat am = oracle::zeros(m, n);
    for (auto& row : am)
      for (auto& v : row) v = u(rng);
    for (int j = 0; j < n; ++j) am[j][j] += 2.0;  // keep columns independent
    std::vector<double> w(m);
    for (auto& v : w) v = 0.25 + std::abs(u(rng)) * 2.0;

    std::vector<double> d(n), b(m);
    for (auto& v : d) v = u(rng);
    for (auto& v : b) v = u(rng);

    auto scale = [](const std::vector<double>& v) {
      double s = 1.0;
      for (double x : v) s = std::max(s, std::abs(x));
      return s;
    };

    auto a = from_oracle(am);
    auto x1 = linalg::min_norm_solve(a, w, d);
    auto r1 = oracle::kkt_min_norm(am, w, d);
    worst_mn = std::max(worst_mn, max_abs_diff(x1, r1) / scale(r1));

    auto x2 = linalg::weighted_ls_solve(a, w, b);
    auto r2 = oracle::normal_eq_ls(am, w, b);
    worst_ls = std::max(worst_ls, max_abs_diff(x2, r2) / scale(r2));
  }
  CHECK(worst_mn < 1e-10);
  CHECK(worst_ls < 1e-10);
}

// ===========================================================================
// Condition number estimate
// ===========================================================================

TEST_CASE("condition estimate diagonal cases") {
  CHECK(linalg::condition_2norm_estimate(DenseMatrix::identity(5)) ==
        doctest::Approx(1.0).epsilon(1e-6));

  DenseMatrix d(2, 2);
  d(0, 0) = 10.0;
  d(1, 1) = 0.1;
  CHECK(linalg::condition_2norm_estimate(d) == doctest::Approx(100.0).epsilon(0.01));

  DenseMatrix d2(3, 3);
  d2(0, 0) = 1.0;
  d2(1, 1) = 0.2;
  d2(2, 2) = 1e-6;
  CHECK(linalg::condition_2norm_estimate(d2) == doctest::Approx(1e6).epsilon(0.01));
}

TEST_CASE("condition estimate against Jacobi SVD oracle on Hilbert 6x6") {
  const int n = 6;
  oracle::Mat hm = oracle::zeros(n, n);
  DenseMatrix h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      h(i, j) = 1.0 / (i + j + 1.0);
      hm[i][j] = h(i, j);
    }
  auto sv = oracle::jacobi_singular_values(hm);
  double cond_ref = sv.front() / sv.back();
  double cond = linalg::condition_2norm_estimate(h);
  CHECK(std::abs(cond - cond_ref) < 0.1 * cond_ref);
}

TEST_CASE("condition estimate returns infinity for singular matrix") {
  DenseMatrix a(3, 3);
  a(0, 0) = 1;
  a(0, 1) = 2;
  a(0, 2) = 3;
  for (int j = 0; j < 3; ++j) {
    a(1, j) = 2 * a(0, j);
    a(2, j) = 3 * a(0, j);
  }
  CHECK(std::isinf(linalg::condition_2norm_estimate(a)));
}

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/zeta.hpp>
#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "qfeat/error.hpp"
#include "qfeat/kernel.hpp"
#include "qfeat/rng.hpp"

using namespace qfeat;
using doctest::Approx;

namespace {
Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}
}  // namespace

TEST_CASE("gaussian kernel values") {
  CHECK(gaussian_kernel(vec({0.3, -1.0}), vec({0.3, -1.0}), 1.0) == 1.0);
  CHECK(gaussian_kernel(vec({0, 0, 0}), vec({2, 0, 0}), 1.0) == Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(gaussian_kernel(vec({0, 0}), vec({1, 1}), 0.5) == Approx(0.135335283).epsilon(1e-8));
  CHECK_THROWS_AS(gaussian_kernel(vec({0, 0}), vec({1}), 1.0), ArgumentError);
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0).validate(), ArgumentError);
}

TEST_CASE("spline kernel against zeta values") {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  // |truncated - exact| is bounded by the tail 2 K^(1-q)/(q-1) = 2e-6.
  const double tail = spline_tail_bound(2.0, 1'000'000);
  CHECK(tail == Approx(2e-6));
  CHECK(std::abs(spline_kernel(0.4, 0.4, 2.0, 1'000'000) - (1 + pi2 / 3)) <= tail);
  CHECK(spline_kernel(0.4, 0.4, 2.0, 1'000'000) == Approx(4.289868).epsilon(1e-6));
  // Alternating series: error below the first omitted term.
  CHECK(std::abs(spline_kernel(0.0, 0.5, 2.0, 1'000'000) - (1 - pi2 / 6)) <= 2e-12 + 1e-12);
  CHECK(spline_kernel(0.0, 0.5, 2.0, 1'000'000) == Approx(-0.644934).epsilon(1e-6));
  CHECK(std::abs(spline_kernel(0.3, 0.3, 5.0, 100) - (1 + 2 * boost::math::zeta(5.0))) <=
        spline_tail_bound(5.0, 100));
  CHECK(spline_kernel(0.3, 0.3, 5.0, 100) == Approx(oracle::spline_direct(0.3, 0.3, 5.0, 100)).epsilon(1e-14));
  CHECK(spline_kernel(0.3, 0.3, 5.0, 100) == Approx(3.073855).epsilon(1e-6));
}

TEST_CASE("spline kernel matches direct summation") {
  Philox g(3);
  for (int i = 0; i < 50; ++i) {
    const double x = g.uniform(), xp = g.uniform();
    const double q = 1.5 + 8 * g.uniform();
    const std::int64_t K = 1 + static_cast<std::int64_t>(g.below(3000));
    CHECK(spline_kernel(x, xp, q, K) == Approx(oracle::spline_direct(x, xp, q, K)).epsilon(1e-11));
  }
  // Long series exercise the recurrence resync.
  CHECK(spline_kernel(0.123, 0.9, 1.5, 200'000) ==
        Approx(oracle::spline_direct(0.123, 0.9, 1.5, 200'000)).epsilon(1e-10));
}

TEST_CASE("spline kernel symmetry and periodicity") {
  Philox g(4);
  for (int i = 0; i < 100; ++i) {
    const double x = g.uniform(), xp = g.uniform();
    CHECK(spline_kernel(x, xp, 3.0, 500) == spline_kernel(xp, x, 3.0, 500));
    CHECK(spline_kernel(x, xp, 3.0, 500) == Approx(spline_series(x - xp + 1.0, 3.0, 500)).epsilon(1e-12));
    CHECK(spline_lag(x, xp) <= 0.5);
    CHECK(spline_kernel(x, xp, 3.0, 500) == Approx(spline_series(xp - x, 3.0, 500)).epsilon(1e-12));
  }
}

TEST_CASE("truncation tail bound holds") {
  Philox g(5);
  for (int i = 0; i < 40; ++i) {
    const double x = g.uniform(), xp = g.uniform();
    const double q = 1.2 + 4 * g.uniform();
    const std::int64_t K = 5 + static_cast<std::int64_t>(g.below(400));
    CHECK(std::abs(spline_kernel(x, xp, q, K) - spline_kernel(x, xp, q, 4 * K)) <=
          spline_tail_bound(q, K) + 1e-13);
  }
}

TEST_CASE("default truncation") {
  for (double q : {1.5, 2.0, 3.0, 5.0, 10.0, 20.0}) {
    const auto K = spline_truncation(q);
    CHECK(K >= 1);
    CHECK(K <= kSplineTermCap);
    if (K < kSplineTermCap) {
      CHECK(spline_tail_bound(q, K) < 1e-8);
      if (K > 1) CHECK(spline_tail_bound(q, K - 1) >= 1e-8);
    }
  }
  CHECK(spline_truncation(2.0) == kSplineTermCap);
  CHECK(spline_truncation(1.0) == kSplineTermCap);
  CHECK(KernelSpec::spline(1.0).approximate());
  CHECK_FALSE(KernelSpec::spline(3.0).approximate());
  CHECK(std::isinf(spline_tail_bound(0.8, 100)));
}

TEST_CASE("infinite order is the constant kernel") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(spline_kernel(0.1, 0.7, inf, 10) == 1.0);
  CHECK(spline_coefficients(inf, 10).empty());
}

TEST_CASE("spline composition by trapezoid rule") {
  const int N = 2048;
  Philox g(6);
  for (int i = 0; i < 10; ++i) {
    const double x = g.uniform(), xp = g.uniform();
    double integral = 0;
    for (int j = 0; j < N; ++j) {
      // Periodic integrand: the trapezoid rule reduces to an equal-weight sum.
      const double z = static_cast<double>(j) / N;
      integral += spline_kernel(x, z, 2.0, 20000) * spline_kernel(xp, z, 2.0, 20000);
    }
    integral /= N;
    CHECK(std::abs(integral - spline_kernel(x, xp, 4.0, 20000)) <= 1e-4);
  }
}

TEST_CASE("gram matrix examples") {
  Matrix one(1, 2);
  one << 0.2, 0.7;
  CHECK(gram_matrix(one, one, KernelSpec::gaussian())(0, 0) == 1.0);

  Matrix X(2, 1);
  X << 0.0, 0.5;
  const Matrix G = gram_matrix(X, X, KernelSpec::spline(2.0, 1'000'000));
  CHECK(G(0, 0) == Approx(4.289868).epsilon(1e-6));
  CHECK(G(1, 1) == Approx(4.289868).epsilon(1e-6));
  CHECK(G(0, 1) == Approx(-0.644934).epsilon(1e-6));
  CHECK(G(1, 0) == G(0, 1));

  Matrix X2(3, 2);
  X2.setZero();
  CHECK_THROWS_AS(gram_matrix(X2, X2, KernelSpec::spline(2.0)), ArgumentError);
  Matrix X3(3, 3);
  X3.setZero();
  CHECK_THROWS_AS(gram_matrix(X2, X3, KernelSpec::gaussian()), ArgumentError);
}

TEST_CASE("gram matrices are positive semidefinite") {
  Philox g(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(g.below(46));
    Matrix Xg(n, 3), Xs(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) Xg(i, j) = 2 * g.normal();
      Xs(i, 0) = g.uniform();
    }
    for (const auto& [X, spec] : {std::pair{Xg, KernelSpec::gaussian()},
                                  std::pair{Xs, KernelSpec::spline(4.0)}}) {
      const Matrix G = gram_matrix(X, X, spec);
      CHECK((G - G.transpose()).cwiseAbs().maxCoeff() == 0.0);
      const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(G).eigenvalues().minCoeff();
      CHECK(min_eig >= -1e-8 * G.trace());
    }
  }
}

TEST_CASE("spline eigenvalues") {
  CHECK(spline_eigenvalues(2.0, 2) == std::vector<Eigenvalue>{{1, 1}, {1, 2}, {0.25, 2}});
  CHECK(spline_eigenvalues(10.0, 1) == std::vector<Eigenvalue>{{1, 1}, {1, 2}});
  const auto e = spline_eigenvalues(5.0, 3);
  REQUIRE(e.size() == 4);
  CHECK(e[2].value == Approx(0.03125));
  CHECK(e[3].value == Approx(std::pow(3.0, -5.0)));
  CHECK(e[3].multiplicity == 2);
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i].value <= e[i - 1].value);
}

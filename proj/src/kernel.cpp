#include "qfeat/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qfeat/error.hpp"
#include "qfeat/parallel.hpp"

namespace qfeat {

KernelSpec KernelSpec::gaussian(double bandwidth) {
  KernelSpec s;
  s.kind = KernelKind::gaussian;
  s.bandwidth = bandwidth;
  s.validate();
  return s;
}

KernelSpec KernelSpec::spline(double q, std::int64_t truncation) {
  KernelSpec s;
  s.kind = KernelKind::spline;
  s.order_q = q;
  s.truncation_K = truncation;
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  if (kind == KernelKind::gaussian) {
    require(bandwidth > 0 && std::isfinite(bandwidth), "gaussian bandwidth must be positive");
  } else {
    require(order_q > 0, "spline order q must be positive");
    require(truncation_K >= 0, "spline truncation must be >= 1 (or 0 for default)");
  }
}

std::int64_t KernelSpec::effective_truncation() const {
  return truncation_K > 0 ? truncation_K : spline_truncation(order_q);
}

bool KernelSpec::approximate() const { return kind == KernelKind::spline && order_q <= 1.0; }

std::int64_t spline_truncation(double q) {
  if (!(q > 1.0)) return kSplineTermCap;
  if (std::isinf(q)) return 1;
  const double guess = std::pow(2e8 / (q - 1.0), 1.0 / (q - 1.0));
  if (!(guess < static_cast<double>(kSplineTermCap))) return kSplineTermCap;
  auto K = std::max<std::int64_t>(1, static_cast<std::int64_t>(guess) - 1);
  while (K < kSplineTermCap && !(spline_tail_bound(q, K) < 1e-8)) ++K;
  return K;
}

double spline_tail_bound(double q, std::int64_t K) {
  if (!(q > 1.0)) return std::numeric_limits<double>::infinity();
  return 2.0 * std::pow(static_cast<double>(K), 1.0 - q) / (q - 1.0);
}

double gaussian_kernel(const VectorRef& x, const VectorRef& x_prime, double bandwidth) {
  require(x.size() == x_prime.size(), "gaussian_kernel: dimension mismatch");
  require(bandwidth > 0, "gaussian_kernel: bandwidth must be positive");
  return std::exp(-(x - x_prime).squaredNorm() / (2.0 * bandwidth));
}

namespace {

template <class Coeff>
double cosine_series(double t, std::int64_t K, Coeff&& coeff_at) {
  const double theta = 2.0 * std::numbers::pi * t;
  const double c1 = std::cos(theta);
  const double s1 = std::sin(theta);
  double c = c1;
  double s = s1;
  double sum = 0.0;
  for (std::int64_t k = 1; k <= K; ++k) {
    if (k > 1) {
      if ((k & 255) == 0) {
        // resync the rotation to bound drift
        const double phase = theta * static_cast<double>(k);
        c = std::cos(phase);
        s = std::sin(phase);
      } else {
        const double cn = c * c1 - s * s1;
        s = s * c1 + c * s1;
        c = cn;
      }
    }
    const double coeff = coeff_at(k);
    if (coeff == 0.0) break;
    sum += c * coeff;
  }
  return 1.0 + 2.0 * sum;
}

}  // namespace

double spline_series(double t, double q, std::int64_t K) {
  if (std::isinf(q)) return 1.0;
  return cosine_series(t, K, [q](std::int64_t k) { return std::pow(static_cast<double>(k), -q); });
}

std::vector<double> spline_coefficients(double q, std::int64_t K) {
  std::vector<double> coeffs(static_cast<std::size_t>(std::isinf(q) ? 0 : K));
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    coeffs[i] = std::pow(static_cast<double>(i + 1), -q);
  }
  return coeffs;
}

double spline_series(double t, std::span<const double> coeffs) {
  return cosine_series(t, static_cast<std::int64_t>(coeffs.size()),
                       [&](std::int64_t k) { return coeffs[static_cast<std::size_t>(k - 1)]; });
}

double spline_lag(double x, double x_prime) {
  double t = std::abs(x - x_prime);
  t -= std::floor(t);
  return std::min(t, 1.0 - t);
}

double spline_kernel(double x, double x_prime, double q, std::int64_t K) {
  require(q > 0, "spline_kernel: q must be positive");
  require(K >= 1, "spline_kernel: K must be >= 1");
  return spline_series(spline_lag(x, x_prime), q, K);
}

double kernel_eval(const KernelSpec& spec, const VectorRef& x, const VectorRef& x_prime) {
  if (spec.kind == KernelKind::gaussian) return gaussian_kernel(x, x_prime, spec.bandwidth);
  require(x.size() == 1 && x_prime.size() == 1, "spline kernel requires d = 1");
  return spline_kernel(x[0], x_prime[0], spec.order_q, spec.effective_truncation());
}

Matrix gram_matrix(const MatrixRef& X, const MatrixRef& X_prime, const KernelSpec& spec) {
  spec.validate();
  require(X.cols() == X_prime.cols(), "gram_matrix: dimension mismatch");
  if (spec.kind == KernelKind::spline) {
    require(X.cols() == 1, "gram_matrix: spline kernel requires d = 1");
  }
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X_prime.rows();
  Matrix G(n, m);
  const std::vector<double> coeffs =
      spec.kind == KernelKind::spline
          ? spline_coefficients(spec.order_q, spec.effective_truncation())
          : std::vector<double>{};
  const double inv2h = 1.0 / (2.0 * spec.bandwidth);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (spec.kind == KernelKind::gaussian) {
        G(i, j) = std::exp(-(X.row(i) - X_prime.row(j)).squaredNorm() * inv2h);
      } else {
        G(i, j) = spline_series(spline_lag(X(i, 0), X_prime(j, 0)), coeffs);
      }
    }
  }
  return G;
}

std::vector<Eigenvalue> spline_eigenvalues(double q, std::int64_t K) {
  require(q > 0, "spline_eigenvalues: q must be positive");
  require(K >= 1, "spline_eigenvalues: K must be >= 1");
  std::vector<Eigenvalue> eigs;
  eigs.reserve(static_cast<std::size_t>(K) + 1);
  eigs.push_back({1.0, 1});
  for (std::int64_t k = 1; k <= K; ++k) {
    eigs.push_back({std::pow(static_cast<double>(k), -q), 2});
  }
  // Already non-increasing; the stable sort keeps (1,1) ahead of (1,2).
  std::stable_sort(eigs.begin(), eigs.end(),
                   [](const Eigenvalue& a, const Eigenvalue& b) { return a.value > b.value; });
  return eigs;
}

}  // namespace qfeat

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qfeat/types.hpp"

namespace qfeat {

enum class KernelKind { gaussian, spline };

// Exact kernel description. Gaussian uses exp(-|x - x'|^2 / (2 bandwidth));
// spline is the periodic kernel on [0,1] with Fourier coefficients |k|^-q.
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double bandwidth = 1.0;
  double order_q = 2.0;
  // 0 selects the default cutoff (see spline_truncation).
  std::int64_t truncation_K = 0;

  static KernelSpec gaussian(double bandwidth = 1.0);
  static KernelSpec spline(double q, std::int64_t truncation = 0);

  // Throws ArgumentError when an invariant is violated.
  void validate() const;
  // Series cutoff actually used for a spline spec.
  std::int64_t effective_truncation() const;
  // True when the spline series is evaluated at the cap for q <= 1.
  bool approximate() const;
};

inline constexpr std::int64_t kSplineTermCap = 1'000'000;

// Smallest K with 2 K^(1-q) / (q-1) < 1e-8, capped at kSplineTermCap.
// Returns the cap for q <= 1.
std::int64_t spline_truncation(double q);

// Tail bound of the truncated spline series, 2 K^(1-q) / (q-1). Infinite for q <= 1.
double spline_tail_bound(double q, std::int64_t K);

double gaussian_kernel(const VectorRef& x, const VectorRef& x_prime, double bandwidth = 1.0);

// 1 + 2 sum_{k=1..K} cos(2 pi k (x - x')) k^-q. An infinite q (the gamma -> 0
// limit) returns the constant 1.
double spline_kernel(double x, double x_prime, double q, std::int64_t K);

// Distance between x and x' on the unit circle, in [0, 1/2]. Exactly
// symmetric in its arguments; the spline series is even and 1-periodic in t.
double spline_lag(double x, double x_prime);

// Spline evaluation as a function of the difference t = x - x'.
double spline_series(double t, double q, std::int64_t K);

// k^-q for k = 1..K (empty for infinite q), for repeated evaluation.
std::vector<double> spline_coefficients(double q, std::int64_t K);
double spline_series(double t, std::span<const double> coeffs);

double kernel_eval(const KernelSpec& spec, const VectorRef& x, const VectorRef& x_prime);

// n x m matrix of kernel values between rows of X and rows of X_prime.
// Rows are filled in parallel.
Matrix gram_matrix(const MatrixRef& X, const MatrixRef& X_prime, const KernelSpec& spec);

struct Eigenvalue {
  double value;
  int multiplicity;
  friend bool operator==(const Eigenvalue&, const Eigenvalue&) = default;
};

// Spectrum of the spline integral operator under the uniform measure:
// (1, 1) followed by (k^-q, 2) for k = 1..K, sorted descending.
std::vector<Eigenvalue> spline_eigenvalues(double q, std::int64_t K);

}  // namespace qfeat

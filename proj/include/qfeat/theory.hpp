#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "qfeat/error.hpp"
#include "qfeat/kernel.hpp"
#include "qfeat/types.hpp"

namespace qfeat {

// Source exponent r, capacity exponent gamma, compatibility exponent alpha
// (alpha = 1 for uniform sampling, alpha = gamma for leverage sampling).
struct RegularitySpec {
  double r = 0.5;
  double gamma = 1.0;
  double alpha = 1.0;

  // Throws ConstraintError unless r in (0,1], gamma in [0,1], alpha in [0,1],
  // 2r + gamma >= 1 and gamma <= alpha.
  void validate() const;
};

// Exponents of the (lambda, M) schedule and the predicted excess-risk rate:
// lambda = n^lambda_exponent, M ~ n^feature_exponent, risk ~ n^rate_exponent.
// Templated so the exponents can be evaluated in exact rational arithmetic.
template <class T>
struct ScheduleExponents {
  T lambda_exponent;
  T feature_exponent;
  T rate_exponent;
};

template <class T>
ScheduleExponents<T> schedule_exponents(T r, T gamma, T alpha) {
  const T one(1);
  const T two(2);
  const T denom = two * r + gamma;
  ScheduleExponents<T> e{-one / denom, T(0), -(two * r) / denom};
  if (two * r < one) {
    e.feature_exponent = alpha / denom;
  } else {
    e.feature_exponent = ((two * r - one) * (one + gamma - alpha) + alpha) / denom;
  }
  return e;
}

struct RateSchedule {
  double lambda;
  std::int64_t M_min;
  double predicted_rate_exponent;
  double feature_exponent;
};

// lambda = n^{-1/(2r+gamma)}, M_min = ceil(C_M n^e).
RateSchedule rate_schedule(const RegularitySpec& spec, std::int64_t n, double C_M = 1.0);

// sum mult * mu / (mu + lambda).
double effective_dimension(std::span<const Eigenvalue> eigs, double lambda);

// Trace of Phi^T Phi (Phi^T Phi + lambda n I)^-1, i.e. the sum of leverage scores.
double empirical_effective_dimension(const MatrixRef& Phi, double lambda);

// Heuristic N_inf(lambda) estimate: pool size times the largest leverage score.
double max_feature_dimension(const VectorRef& pool_scores);

// sqrt((1/n) sum mult * min(mu, delta^2)).
double rademacher_complexity(std::span<const Eigenvalue> eigs, std::int64_t n, double delta);

// Unique delta > 0 with R(delta) = delta^{1 + 2r}, by bisection.
double rademacher_fixed_point(std::span<const Eigenvalue> eigs, std::int64_t n, double r);

struct SlopeFit {
  double slope;
  double intercept;
  double stderr_slope;
};

// Least squares of log(risk) on log(size).
SlopeFit fit_loglog_slope(std::span<const double> sizes, std::span<const double> risks);

// Eigenvalues of Phi^T Phi / n as (value, 1) pairs.
std::vector<Eigenvalue> empirical_spectrum(const MatrixRef& Phi);

}  // namespace qfeat

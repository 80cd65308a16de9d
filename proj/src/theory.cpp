#include "qfeat/theory.hpp"

#include <algorithm>
#include <limits>

#include "qfeat/features.hpp"

namespace qfeat {

void RegularitySpec::validate() const {
  if (!(r > 0 && r <= 1)) throw ConstraintError("regularity: r must lie in (0, 1]");
  if (!(gamma >= 0 && gamma <= 1)) throw ConstraintError("regularity: gamma must lie in [0, 1]");
  if (!(alpha >= 0 && alpha <= 1)) throw ConstraintError("regularity: alpha must lie in [0, 1]");
  if (2 * r + gamma < 1) throw ConstraintError("regularity: requires 2r + gamma >= 1");
  if (alpha < gamma) throw ConstraintError("regularity: requires gamma <= alpha");
}

RateSchedule rate_schedule(const RegularitySpec& spec, std::int64_t n, double C_M) {
  spec.validate();
  require(n >= 2, "rate_schedule: n must be >= 2");
  require(C_M > 0, "rate_schedule: C_M must be positive");
  const auto e = schedule_exponents(spec.r, spec.gamma, spec.alpha);
  const double dn = static_cast<double>(n);
  RateSchedule s;
  s.lambda = std::pow(dn, e.lambda_exponent);
  // Guard against ceil(2.0000000001) style overshoot from pow rounding.
  const double raw = C_M * std::pow(dn, e.feature_exponent);
  s.M_min = static_cast<std::int64_t>(std::ceil(raw - 1e-9 * raw));
  s.M_min = std::max<std::int64_t>(s.M_min, 1);
  s.predicted_rate_exponent = e.rate_exponent;
  s.feature_exponent = e.feature_exponent;
  return s;
}

double effective_dimension(std::span<const Eigenvalue> eigs, double lambda) {
  require(lambda > 0, "effective_dimension: lambda must be positive");
  double total = 0.0;
  for (const auto& e : eigs) {
    require(e.value >= 0, "effective_dimension: negative eigenvalue");
    total += e.multiplicity * e.value / (e.value + lambda);
  }
  return total;
}

double empirical_effective_dimension(const MatrixRef& Phi, double lambda) {
  return empirical_leverage_scores(Phi, lambda).sum();
}

double max_feature_dimension(const VectorRef& pool_scores) {
  require(pool_scores.size() >= 1, "max_feature_dimension: empty pool");
  return static_cast<double>(pool_scores.size()) * pool_scores.maxCoeff();
}

double rademacher_complexity(std::span<const Eigenvalue> eigs, std::int64_t n, double delta) {
  const double d2 = delta * delta;
  double total = 0.0;
  for (const auto& e : eigs) total += e.multiplicity * std::min(e.value, d2);
  return std::sqrt(total / static_cast<double>(n));
}

double rademacher_fixed_point(std::span<const Eigenvalue> eigs, std::int64_t n, double r) {
  require(n >= 1, "rademacher_fixed_point: n must be >= 1");
  require(r > 0 && r <= 1, "rademacher_fixed_point: r must lie in (0, 1]");
  double top = 0.0;
  for (const auto& e : eigs) {
    require(e.value >= 0, "rademacher_fixed_point: negative eigenvalue");
    if (e.multiplicity > 0) top = std::max(top, e.value);
  }
  require(top > 0, "rademacher_fixed_point: spectrum is all zero");

  const double p = 1.0 + 2.0 * r;
  // h(delta) = R(delta) - delta^p is positive near 0 and eventually negative.
  auto h = [&](double d) { return rademacher_complexity(eigs, n, d) - std::pow(d, p); };
  double hi = std::max(1.0, std::sqrt(top));
  while (h(hi) > 0) hi *= 2.0;
  double lo = hi;
  while (h(lo) <= 0) {
    lo *= 0.5;
    require(lo > std::numeric_limits<double>::min(), "rademacher_fixed_point: no root bracket");
  }
  while ((hi - lo) > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SlopeFit fit_loglog_slope(std::span<const double> sizes, std::span<const double> risks) {
  require(sizes.size() == risks.size(), "fit_loglog_slope: lengths differ");
  require(sizes.size() >= 3, "fit_loglog_slope: need at least 3 points");
  const auto m = static_cast<double>(sizes.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    require(sizes[i] > 0 && risks[i] > 0, "fit_loglog_slope: values must be positive");
    mx += std::log(sizes[i]);
    my += std::log(risks[i]);
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double dx = std::log(sizes[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(risks[i]) - my);
  }
  require(sxx > 1e-300, "fit_loglog_slope: all sizes are equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double e = std::log(risks[i]) - (fit.intercept + fit.slope * std::log(sizes[i]));
    sse += e * e;
  }
  fit.stderr_slope = std::sqrt(sse / (m - 2.0) / sxx);
  return fit;
}

std::vector<Eigenvalue> empirical_spectrum(const MatrixRef& Phi) {
  const double n = static_cast<double>(Phi.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Phi.transpose() * Phi / n, Eigen::EigenvaluesOnly);
  std::vector<Eigenvalue> out;
  for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i) {
    out.push_back({std::max(0.0, es.eigenvalues()[i]), 1});
  }
  return out;
}

}  // namespace qfeat

#include "qfeat/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "qfeat/error.hpp"
#include "qfeat/parallel.hpp"
#include "qfeat/rng.hpp"

namespace qfeat {

std::int64_t FeatureMap::spline_feature_truncation() const {
  return kernel.truncation_K > 0 ? kernel.truncation_K : spline_truncation(spline_feature_order());
}

void FeatureMap::validate() const {
  kernel.validate();
  require(size() >= 1, "feature map must hold at least one feature");
  require(weights.size() == size(), "feature map: weights length must equal M");
  require((weights.array() > 0).all(), "feature map: weights must be positive");
  if (kind == FeatureKind::rff_gaussian) {
    require(kernel.kind == KernelKind::gaussian, "rff features require a gaussian kernel");
    require(phases.size() == size(), "feature map: phases length must equal M");
    require((phases.array() >= 0).all() && (phases.array() < 2 * std::numbers::pi).all(),
            "feature map: phases must lie in [0, 2 pi)");
  } else {
    require(kernel.kind == KernelKind::spline, "spline features require a spline kernel");
    require(params.cols() == 1, "spline anchors must be scalars");
    require((params.array() >= 0).all() && (params.array() <= 1).all(),
            "spline anchors must lie in [0, 1]");
  }
}

FeatureMap sample_uniform_features(const KernelSpec& spec, Eigen::Index M, std::uint64_t seed,
                                   Eigen::Index dim) {
  spec.validate();
  require(M >= 1, "sample_uniform_features: M must be >= 1");
  FeatureMap map;
  map.kernel = spec;
  map.seed = seed;
  map.weights = Vector::Ones(M);
  Philox rng(seed);
  if (spec.kind == KernelKind::gaussian) {
    require(dim >= 1, "sample_uniform_features: dimension must be >= 1");
    map.kind = FeatureKind::rff_gaussian;
    map.params.resize(M, dim);
    map.phases.resize(M);
    const double scale = 1.0 / std::sqrt(spec.bandwidth);
    for (Eigen::Index j = 0; j < M; ++j) {
      for (Eigen::Index k = 0; k < dim; ++k) map.params(j, k) = scale * rng.normal();
      map.phases[j] = 2.0 * std::numbers::pi * rng.uniform();
    }
  } else {
    map.kind = FeatureKind::spline_rf;
    map.params.resize(M, 1);
    for (Eigen::Index j = 0; j < M; ++j) map.params(j, 0) = rng.uniform();
  }
  return map;
}

Matrix feature_matrix(const FeatureMap& map, const MatrixRef& X) {
  require(X.cols() == map.input_dim(), "feature_matrix: dimension mismatch");
  const Eigen::Index n = X.rows();
  const Eigen::Index M = map.size();
  Matrix Phi(n, M);
  if (map.kind == FeatureKind::rff_gaussian) {
    const Vector scale = map.weights * std::sqrt(2.0 / static_cast<double>(M));
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < M; ++j) {
        Phi(i, j) = scale[j] * std::cos(map.params.row(j).dot(X.row(i)) + map.phases[j]);
      }
    }
  } else {
    const Vector scale = map.weights / std::sqrt(static_cast<double>(M));
    const std::vector<double> coeffs =
        spline_coefficients(map.spline_feature_order(), map.spline_feature_truncation());
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < M; ++j) {
        Phi(i, j) = scale[j] * spline_series(spline_lag(X(i, 0), map.params(j, 0)), coeffs);
      }
    }
  }
  return Phi;
}

double approx_kernel(const FeatureMap& map, const VectorRef& x, const VectorRef& x_prime) {
  require(x.size() == map.input_dim() && x_prime.size() == map.input_dim(),
          "approx_kernel: dimension mismatch");
  Matrix pts(2, x.size());
  pts.row(0) = x.transpose();
  pts.row(1) = x_prime.transpose();
  const Matrix Phi = feature_matrix(map, pts);
  return Phi.row(0).dot(Phi.row(1));
}

Vector empirical_leverage_scores(const MatrixRef& Phi, double lambda) {
  require(lambda > 0 && std::isfinite(lambda), "leverage scores: lambda must be positive");
  require(Phi.rows() >= 1, "leverage scores: need at least one row");
  const double n = static_cast<double>(Phi.rows());
  Matrix A = Phi.transpose() * Phi;
  Matrix shifted = A;
  shifted.diagonal().array() += lambda * n;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) throw NumericError("leverage scores: factorization failed");
  // (A + cI)^-1 A is symmetric since both factors commute.
  const Matrix S = llt.solve(A);
  return S.diagonal().cwiseMax(0.0);
}

FeatureMap resample_leverage(const FeatureMap& pool, const VectorRef& scores, Eigen::Index M,
                             std::uint64_t seed) {
  require(M >= 1, "resample_leverage: M must be >= 1");
  require(scores.size() == pool.size(), "resample_leverage: one score per pool feature required");
  require((scores.array() >= 0).all() && scores.allFinite(),
          "resample_leverage: scores must be nonnegative");
  const Eigen::Index pool_m = pool.size();
  std::vector<double> cumulative(static_cast<std::size_t>(pool_m));
  std::partial_sum(scores.data(), scores.data() + pool_m, cumulative.begin());
  const double total = cumulative.back();
  require(total > 0, "resample_leverage: scores are all zero");

  FeatureMap out;
  out.kind = pool.kind;
  out.kernel = pool.kernel;
  out.seed = seed;
  out.sampling = Sampling::leverage;
  out.params.resize(M, pool.params.cols());
  out.weights.resize(M);
  if (pool.kind == FeatureKind::rff_gaussian) out.phases.resize(M);

  Philox rng(seed, streams::kResample);
  for (Eigen::Index j = 0; j < M; ++j) {
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    auto idx = static_cast<Eigen::Index>(std::distance(cumulative.begin(), it));
    idx = std::min(idx, pool_m - 1);
    const double q = scores[idx] / total;
    out.params.row(j) = pool.params.row(idx);
    if (pool.kind == FeatureKind::rff_gaussian) out.phases[j] = pool.phases[idx];
    out.weights[j] = pool.weights[idx] / std::sqrt(static_cast<double>(pool_m) * q);
  }
  return out;
}

Eigen::Index leverage_pool_size(Eigen::Index M, const LeverageOptions& opts) {
  const auto scaled = static_cast<Eigen::Index>(std::ceil(opts.pool_factor * static_cast<double>(M)));
  return std::max(scaled, opts.min_pool);
}

FeatureMap sample_leverage_features(const KernelSpec& spec, Eigen::Index M, const MatrixRef& X,
                                    double lambda, std::uint64_t seed,
                                    const LeverageOptions& opts) {
  const FeatureMap pool = sample_uniform_features(spec, leverage_pool_size(M, opts),
                                                  derive_seed(seed, streams::kFeaturePool), X.cols());
  const double score_lambda = opts.scoring_lambda > 0 ? opts.scoring_lambda : lambda;
  const Vector r = empirical_leverage_scores(feature_matrix(pool, X), score_lambda);
  return resample_leverage(pool, r, M, derive_seed(seed, streams::kResample));
}

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::rff_gaussian ? "rff_gaussian" : "spline_rf";
}

std::string to_string(Sampling s) { return s == Sampling::uniform ? "uniform" : "leverage"; }

Sampling sampling_from_string(const std::string& s) {
  if (s == "uniform") return Sampling::uniform;
  if (s == "leverage") return Sampling::leverage;
  throw ArgumentError("unknown sampling strategy: " + s);
}

}  // namespace qfeat

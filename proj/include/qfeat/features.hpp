#pragma once

#include <cstdint>
#include <string>

#include "qfeat/kernel.hpp"
#include "qfeat/types.hpp"

namespace qfeat {

enum class FeatureKind { rff_gaussian, spline_rf };
enum class Sampling { uniform, leverage };

// A realized set of M random features. Row j of `params` holds the Gaussian
// frequency omega_j (length d) or the spline anchor w_j (length 1); `phases`
// is empty for spline features. Immutable once built.
struct FeatureMap {
  FeatureKind kind = FeatureKind::rff_gaussian;
  KernelSpec kernel;
  Matrix params;
  Vector phases;
  Vector weights;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::uniform;

  Eigen::Index size() const { return params.rows(); }
  Eigen::Index input_dim() const { return kind == FeatureKind::spline_rf ? 1 : params.cols(); }
  // Exponent of the spline feature function, q / 2 for a kernel of order q.
  double spline_feature_order() const { return kernel.order_q / 2.0; }
  std::int64_t spline_feature_truncation() const;

  void validate() const;
};

// Draws M features from the kernel's spectral measure: omega ~ N(0, I / bandwidth),
// b ~ U(0, 2 pi) for Gaussian; anchors w ~ U(0, 1) for spline. All weights 1.
// `dim` is the input dimension (ignored for spline).
FeatureMap sample_uniform_features(const KernelSpec& spec, Eigen::Index M, std::uint64_t seed,
                                   Eigen::Index dim = 1);

// n x M matrix whose row i is phi_M(x_i), including 1/sqrt(M) and the
// per-feature importance weights. Rows are filled in parallel.
Matrix feature_matrix(const FeatureMap& map, const MatrixRef& X);

// <phi_M(x), phi_M(x')>.
double approx_kernel(const FeatureMap& map, const VectorRef& x, const VectorRef& x_prime);

// diag(Phi^T Phi (Phi^T Phi + lambda n I)^-1).
Vector empirical_leverage_scores(const MatrixRef& Phi, double lambda);

// Draws M pool features i.i.d. from q_i = r_i / sum(r), reweighting each by
// [pool.M q_i]^-1/2 so that K_M is unbiased for the pool kernel.
FeatureMap resample_leverage(const FeatureMap& pool, const VectorRef& scores, Eigen::Index M,
                             std::uint64_t seed);

struct LeverageOptions {
  double pool_factor = 4.0;
  Eigen::Index min_pool = 256;
  // Scoring lambda; <= 0 means "use the fitting lambda".
  double scoring_lambda = 0.0;
};

Eigen::Index leverage_pool_size(Eigen::Index M, const LeverageOptions& opts);

// Pool-then-resample leverage sampling scored on the training inputs X.
FeatureMap sample_leverage_features(const KernelSpec& spec, Eigen::Index M, const MatrixRef& X,
                                    double lambda, std::uint64_t seed,
                                    const LeverageOptions& opts = {});

std::string to_string(FeatureKind kind);
std::string to_string(Sampling s);
Sampling sampling_from_string(const std::string& s);

}  // namespace qfeat

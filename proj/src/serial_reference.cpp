#include "qfeat/serial_reference.hpp"

#include <cmath>

#include "qfeat/error.hpp"

namespace qfeat::serial {

Matrix gram_matrix(const MatrixRef& X, const MatrixRef& X_prime, const KernelSpec& spec) {
  spec.validate();
  require(X.cols() == X_prime.cols(), "gram_matrix: dimension mismatch");
  Matrix G(X.rows(), X_prime.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X_prime.rows(); ++j) {
      G(i, j) = kernel_eval(spec, X.row(i).transpose(), X_prime.row(j).transpose());
    }
  }
  return G;
}

Matrix feature_matrix(const FeatureMap& map, const MatrixRef& X) {
  require(X.cols() == map.input_dim(), "feature_matrix: dimension mismatch");
  const Eigen::Index M = map.size();
  const double root_m = std::sqrt(static_cast<double>(M));
  Matrix Phi(X.rows(), M);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < M; ++j) {
      double phi = 0.0;
      if (map.kind == FeatureKind::rff_gaussian) {
        phi = std::sqrt(2.0) * std::cos(map.params.row(j).dot(X.row(i)) + map.phases[j]);
      } else {
        phi = spline_kernel(X(i, 0), map.params(j, 0), map.spline_feature_order(),
                            map.spline_feature_truncation());
      }
      Phi(i, j) = map.weights[j] * phi / root_m;
    }
  }
  return Phi;
}

}  // namespace qfeat::serial

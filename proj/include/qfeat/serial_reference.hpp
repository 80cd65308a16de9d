#pragma once

#include "qfeat/features.hpp"
#include "qfeat/kernel.hpp"
#include "qfeat/types.hpp"

// Straightforward single-threaded versions of the parallel kernels. They
// evaluate every entry through the scalar kernel functions and serve as the
// reference in tests and benchmarks.
namespace qfeat::serial {

Matrix gram_matrix(const MatrixRef& X, const MatrixRef& X_prime, const KernelSpec& spec);

Matrix feature_matrix(const FeatureMap& map, const MatrixRef& X);

}  // namespace qfeat::serial

#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "qfeat/features.hpp"
#include "qfeat/kernel.hpp"
#include "qfeat/loss.hpp"
#include "qfeat/types.hpp"

namespace qfeat {

struct SolverConfig {
  double penalty_rho = 1.0;
  int max_iters = 10'000;
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  // Residual balancing: rho is rescaled by 2 whenever one residual exceeds
  // the other by 10x, for at most `max_rho_updates` updates.
  bool adaptive_rho = true;
  int max_rho_updates = 50;

  void validate() const;
};

struct Diagnostics {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  bool converged = false;
};

enum class ModelForm { random_features, exact_kernel, linear };

// A fitted predictor. Random-feature models keep their FeatureMap; exact
// models keep the kernel and the training inputs; linear models predict from
// a caller-supplied design matrix only.
struct Model {
  ModelForm form = ModelForm::linear;
  Vector coefficients;
  std::shared_ptr<const FeatureMap> features;
  KernelSpec kernel;
  Matrix train_inputs;
  // Empty for the least-squares estimator.
  std::optional<LossSpec> loss;
  double lambda = 0.0;
  Diagnostics diagnostics;
};

// (1/n) sum loss + lambda |u|^2 for a linear predictor Phi u.
double rf_objective(const MatrixRef& Phi, const VectorRef& y, const LossSpec& loss, double lambda,
                    const VectorRef& u);

// Split variable, scaled dual and penalty of an ADMM run. Passing the state
// of a solve at a nearby lambda on the same design warm-starts the next one.
struct AdmmState {
  Vector z;
  Vector w;
  double rho = 0.0;
};

// ADMM for min_u (1/n) sum loss + lambda |u|^2. Check loss splits on
// residuals y - Phi u; hinge and logistic split on margins y_i (Phi u)_i.
// `state`, if given, seeds the iterates when its sizes match and receives
// the final ones.
Model fit_admm(const MatrixRef& Phi, const VectorRef& y, const LossSpec& loss, double lambda,
               const SolverConfig& cfg = {}, AdmmState* state = nullptr);

// fit_admm on feature_matrix(map, X), with the map attached to the model.
Model fit_random_features(std::shared_ptr<const FeatureMap> map, const MatrixRef& X,
                          const VectorRef& y, const LossSpec& loss, double lambda,
                          const SolverConfig& cfg = {});

// Solves (Phi^T Phi / n + lambda I) u = Phi^T t / n.
Model fit_ridge_closed_form(const MatrixRef& Phi, const VectorRef& t, double lambda);

// Representer-form KQR: min_alpha (1/n) sum rho_tau(y - K alpha) + lambda alpha^T K alpha.
// Eigenvalues of K below 1e-10 trace are floored before solving.
Model fit_exact_kqr(const MatrixRef& K_gram, const VectorRef& y, double tau, double lambda,
                    const SolverConfig& cfg = {});

// fit_exact_kqr on gram_matrix(X, X, kernel), keeping X for prediction.
Model fit_exact_kqr(const KernelSpec& kernel, const MatrixRef& X, const VectorRef& y, double tau,
                    double lambda, const SolverConfig& cfg = {});

Vector predict(const Model& model, const MatrixRef& X);

// Phi u, for models fitted directly on a design matrix.
Vector predict_linear(const Model& model, const MatrixRef& Phi);

// Projected subgradient descent with step c / sqrt(t) from zero, returning the
// best iterate. Slow; meant as an independent check on tiny problems. The seed
// picks subgradients at kinks.
Model oracle_subgradient(const MatrixRef& Phi, const VectorRef& y, const LossSpec& loss,
                         double lambda, int iters, std::uint64_t seed);

}  // namespace qfeat

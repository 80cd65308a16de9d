#include "qfeat/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qfeat/error.hpp"
#include "qfeat/rng.hpp"

namespace qfeat {

void SolverConfig::validate() const {
  require(penalty_rho > 0, "solver: penalty_rho must be positive");
  require(max_iters >= 1, "solver: max_iters must be >= 1");
  require(tol_primal > 0 && tol_dual > 0, "solver: tolerances must be positive");
}

namespace {

// Eigendecomposition of Phi^T Phi. An empty basis stands for the identity.
struct Spectrum {
  Matrix basis;
  Vector values;
};

Spectrum gram_spectrum(const MatrixRef& Phi) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Phi.transpose() * Phi);
  if (es.info() != Eigen::Success) throw NumericError("admm: eigendecomposition failed");
  return {es.eigenvectors(), es.eigenvalues().cwiseMax(0.0)};
}

void check_inputs(const MatrixRef& Phi, const VectorRef& y, const LossSpec& loss, double lambda) {
  loss.validate();
  require(Phi.rows() >= 1, "fit: need at least one sample");
  require(Phi.rows() == y.size(), "fit: Phi rows must equal length of y");
  require(lambda > 0 && std::isfinite(lambda), "fit: lambda must be positive");
  require(Phi.allFinite() && y.allFinite(), "fit: inputs must be finite");
  if (loss.uses_margin()) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      require(y[i] == 1.0 || y[i] == -1.0, "fit: margin losses require labels in {-1, +1}");
    }
  }
}

// Splitting z = c + S u, with S = -Phi, c = y for residual losses and
// S = diag(y) Phi, c = 0 for margin losses.
struct Splitting {
  const MatrixRef& Phi;
  const VectorRef& y;
  bool margin;

  Vector offset() const { return margin ? Vector::Zero(y.size()) : Vector(y); }
};

struct AdmmResult {
  Vector u;
  Diagnostics diagnostics;
};

AdmmResult admm(const MatrixRef& Phi, const VectorRef& y, const LossSpec& loss, double lambda,
                const SolverConfig& cfg, const Spectrum& spectrum, AdmmState* state) {
  const Eigen::Index n = Phi.rows();
  const Eigen::Index M = Phi.cols();
  const double dn = static_cast<double>(n);
  const Splitting split{Phi, y, loss.uses_margin()};
  const Vector c = split.offset();

  Vector u = Vector::Zero(M);
  Vector z = c;
  Vector w = Vector::Zero(n);
  double rho = cfg.penalty_rho;
  const bool warm = state != nullptr && state->z.size() == n && state->w.size() == n && state->rho > 0;
  if (warm) {
    z = state->z;
    w = state->w;
    rho = state->rho;
  }
  int rho_updates = 0;
  const double primal_bound = cfg.tol_primal * std::sqrt(dn);
  const double dual_bound = cfg.tol_dual * std::sqrt(dn);

  // S = diag(sgn) Phi; buffers are reused across iterations.
  const Vector sgn = split.margin ? Vector(y) : Vector(-Vector::Ones(n));
  Vector buf_n(n), f(n), dz(n), rhs(M), coef(M);
  Vector denom = (2.0 * dn * lambda + rho * spectrum.values.array()).matrix();
  double denom_rho = rho;

  AdmmResult out;
  Diagnostics& diag = out.diagnostics;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    buf_n = sgn.cwiseProduct(z - c - w);
    rhs.noalias() = rho * (Phi.transpose() * buf_n);
    if (rho != denom_rho) {
      denom = (2.0 * dn * lambda + rho * spectrum.values.array()).matrix();
      denom_rho = rho;
    }
    if (spectrum.basis.size() == 0) {
      u = rhs.cwiseQuotient(denom);
    } else {
      coef.noalias() = spectrum.basis.transpose() * rhs;
      u.noalias() = spectrum.basis * coef.cwiseQuotient(denom);
    }
    f.noalias() = Phi * u;
    const double eta = 1.0 / rho;
    double rn2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double su = sgn[i] * f[i];
      const double z_prev = z[i];
      z[i] = prox(loss, c[i] + su + w[i], eta);
      const double r = c[i] + su - z[i];
      w[i] += r;
      rn2 += r * r;
      dz[i] = sgn[i] * (z[i] - z_prev);
    }
    const double rn = std::sqrt(rn2);
    rhs.noalias() = Phi.transpose() * dz;
    const double sn = rho * rhs.norm();
    diag.iterations = it;
    diag.primal_residual = rn;
    diag.dual_residual = sn;
    if (!std::isfinite(rn) || !std::isfinite(sn)) throw NumericError("admm: iterates diverged");
    if (rn <= primal_bound && sn <= dual_bound) {
      diag.converged = true;
      break;
    }
    if (cfg.adaptive_rho && rho_updates < cfg.max_rho_updates) {
      if (rn > 10.0 * sn) {
        rho *= 2.0;
        w /= 2.0;
        ++rho_updates;
      } else if (sn > 10.0 * rn) {
        rho /= 2.0;
        w *= 2.0;
        ++rho_updates;
      }
    }
  }
  if (state != nullptr) *state = AdmmState{z, w, rho};
  out.u = std::move(u);
  return out;
}

}  // namespace

double rf_objective(const MatrixRef& Phi, const VectorRef& y, const LossSpec& loss, double lambda,
                    const VectorRef& u) {
  const Vector f = Phi * u;
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) total += loss_eval(loss, y[i], f[i]);
  return total / static_cast<double>(f.size()) + lambda * u.squaredNorm();
}

Model fit_admm(const MatrixRef& Phi, const VectorRef& y, const LossSpec& loss, double lambda,
               const SolverConfig& cfg, AdmmState* state) {
  cfg.validate();
  check_inputs(Phi, y, loss, lambda);
  AdmmResult res = admm(Phi, y, loss, lambda, cfg, gram_spectrum(Phi), state);
  Model model;
  model.form = ModelForm::linear;
  model.coefficients = std::move(res.u);
  if (!model.coefficients.allFinite()) throw NumericError("admm: non-finite coefficients");
  model.loss = loss;
  model.lambda = lambda;
  model.diagnostics = res.diagnostics;
  model.diagnostics.objective = rf_objective(Phi, y, loss, lambda, model.coefficients);
  return model;
}

Model fit_random_features(std::shared_ptr<const FeatureMap> map, const MatrixRef& X,
                          const VectorRef& y, const LossSpec& loss, double lambda,
                          const SolverConfig& cfg) {
  require(map != nullptr, "fit_random_features: missing feature map");
  const Matrix Phi = feature_matrix(*map, X);
  Model model = fit_admm(Phi, y, loss, lambda, cfg);
  model.form = ModelForm::random_features;
  model.features = std::move(map);
  return model;
}

Model fit_ridge_closed_form(const MatrixRef& Phi, const VectorRef& t, double lambda) {
  require(Phi.rows() >= 1 && Phi.rows() == t.size(), "ridge: Phi rows must equal length of t");
  require(lambda > 0 && std::isfinite(lambda), "ridge: lambda must be positive");
  const double n = static_cast<double>(Phi.rows());
  Matrix A = Phi.transpose() * Phi / n;
  A.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) throw NumericError("ridge: factorization failed");
  Model model;
  model.form = ModelForm::linear;
  model.coefficients = llt.solve(Phi.transpose() * t / n);
  if (!model.coefficients.allFinite()) throw NumericError("ridge: non-finite solution");
  model.lambda = lambda;
  model.diagnostics.converged = true;
  model.diagnostics.objective =
      (t - Phi * model.coefficients).squaredNorm() / n + lambda * model.coefficients.squaredNorm();
  return model;
}

Model fit_exact_kqr(const MatrixRef& K_gram, const VectorRef& y, double tau, double lambda,
                    const SolverConfig& cfg) {
  cfg.validate();
  const LossSpec loss = LossSpec::check(tau);
  require(K_gram.rows() == K_gram.cols(), "exact kqr: Gram matrix must be square");
  check_inputs(K_gram, y, loss, lambda);

  Eigen::SelfAdjointEigenSolver<Matrix> es(K_gram);
  if (es.info() != Eigen::Success) throw NumericError("exact kqr: eigendecomposition failed");
  const double floor = std::max(1e-10 * K_gram.trace(), std::numeric_limits<double>::min());
  const Vector evals = es.eigenvalues().cwiseMax(floor);
  const Vector root = evals.cwiseSqrt();
  // With beta = Lambda^1/2 V^T alpha the problem is the linear one in Phi = V Lambda^1/2,
  // whose Gram matrix Phi^T Phi = Lambda is already diagonal.
  const Matrix Phi = es.eigenvectors() * root.asDiagonal();
  AdmmResult res = admm(Phi, y, loss, lambda, cfg, Spectrum{Matrix(), evals}, nullptr);

  Model model;
  model.form = ModelForm::exact_kernel;
  model.coefficients = es.eigenvectors() * res.u.cwiseQuotient(root);
  if (!model.coefficients.allFinite()) throw NumericError("exact kqr: non-finite coefficients");
  model.loss = loss;
  model.lambda = lambda;
  model.diagnostics = res.diagnostics;
  const Vector f = K_gram * model.coefficients;
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) total += check_loss(y[i] - f[i], tau);
  model.diagnostics.objective = total / static_cast<double>(f.size()) +
                                lambda * model.coefficients.dot(K_gram * model.coefficients);
  return model;
}

Model fit_exact_kqr(const KernelSpec& kernel, const MatrixRef& X, const VectorRef& y, double tau,
                    double lambda, const SolverConfig& cfg) {
  Model model = fit_exact_kqr(gram_matrix(X, X, kernel), y, tau, lambda, cfg);
  model.kernel = kernel;
  model.train_inputs = X;
  return model;
}

Vector predict(const Model& model, const MatrixRef& X) {
  switch (model.form) {
    case ModelForm::random_features:
      require(model.features != nullptr, "predict: model has no feature map");
      return feature_matrix(*model.features, X) * model.coefficients;
    case ModelForm::exact_kernel:
      require(X.cols() == model.train_inputs.cols(), "predict: dimension mismatch");
      return gram_matrix(X, model.train_inputs, model.kernel) * model.coefficients;
    case ModelForm::linear:
      break;
  }
  throw ArgumentError("predict: linear models need a design matrix (use predict_linear)");
}

Vector predict_linear(const Model& model, const MatrixRef& Phi) {
  require(Phi.cols() == model.coefficients.size(), "predict_linear: dimension mismatch");
  return Phi * model.coefficients;
}

Model oracle_subgradient(const MatrixRef& Phi, const VectorRef& y, const LossSpec& loss,
                         double lambda, int iters, std::uint64_t seed) {
  check_inputs(Phi, y, loss, lambda);
  const Eigen::Index n = Phi.rows();
  const Eigen::Index M = Phi.cols();
  const double dn = static_cast<double>(n);
  Philox rng(seed);

  // lambda |u*|^2 <= F(u*) <= F(0) bounds the minimizer.
  const double f0 = rf_objective(Phi, y, loss, lambda, Vector::Zero(M));
  const double radius = std::sqrt(f0 / lambda);
  const double row_norm = Phi.rowwise().norm().maxCoeff();
  const double grad_bound = loss.lipschitz_constant() * row_norm + 2.0 * lambda * radius;
  const double step0 = grad_bound > 0 ? radius / grad_bound : 0.0;

  Vector u = Vector::Zero(M);
  Vector best = u;
  double best_obj = f0;
  for (int t = 1; t <= iters; ++t) {
    const Vector f = Phi * u;
    Vector g_f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      // derivative of loss_i with respect to f_i
      switch (loss.kind) {
        case LossKind::check: {
          const double r = y[i] - f[i];
          if (r > 0) {
            g_f[i] = -loss.tau;
          } else if (r < 0) {
            g_f[i] = 1.0 - loss.tau;
          } else {
            g_f[i] = -loss.tau + rng.uniform();
          }
          break;
        }
        case LossKind::hinge: {
          const double m = y[i] * f[i];
          const double a = m < 1 ? 1.0 : (m > 1 ? 0.0 : rng.uniform());
          g_f[i] = -a * y[i];
          break;
        }
        case LossKind::logistic: {
          const double m = y[i] * f[i];
          g_f[i] = -y[i] / (1.0 + std::exp(m));
          break;
        }
      }
    }
    const Vector grad = Phi.transpose() * g_f / dn + 2.0 * lambda * u;
    u -= (step0 / std::sqrt(static_cast<double>(t))) * grad;
    const double norm = u.norm();
    if (norm > radius) u *= radius / norm;
    const double obj = rf_objective(Phi, y, loss, lambda, u);
    if (obj < best_obj) {
      best_obj = obj;
      best = u;
    }
  }
  Model model;
  model.form = ModelForm::linear;
  model.coefficients = best;
  model.loss = loss;
  model.lambda = lambda;
  model.diagnostics.iterations = iters;
  model.diagnostics.objective = best_obj;
  return model;
}

}  // namespace qfeat

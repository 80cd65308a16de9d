#pragma once

// Independent reference computations used only by tests. None of these call
// into the code paths they are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

#include "qfeat/loss.hpp"

namespace qfeat::oracle {

// Loss on the split variable, written out independently in long double.
inline long double split_loss_ld(const LossSpec& spec, long double z) {
  switch (spec.kind) {
    case LossKind::check:
      return z > 0 ? spec.tau * z : (static_cast<long double>(spec.tau) - 1.0L) * z;
    case LossKind::hinge:
      return std::max(0.0L, 1.0L - z);
    case LossKind::logistic:
      return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  return 0.0L;
}

// Golden-section minimization of eta * loss(z) + (z - v)^2 / 2 in long double.
// The minimizer lies within eta * Lipschitz of v.
inline double golden_section_prox(const LossSpec& spec, double v, double eta) {
  const long double L = spec.lipschitz_constant();
  long double a = v - eta * L - 1e-9L;
  long double b = v + eta * L + 1e-9L;
  auto f = [&](long double z) {
    return eta * split_loss_ld(spec, z) + 0.5L * (z - v) * (z - v);
  };
  const long double inv_phi = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  long double c = b - inv_phi * (b - a);
  long double d = a + inv_phi * (b - a);
  long double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13L; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return static_cast<double>((a + b) / 2.0L);
}

// Direct summation of 1 + 2 sum_{k<=K} cos(2 pi k t) k^-q in long double,
// with cos evaluated at every term.
inline double spline_direct(double x, double x_prime, double q, std::int64_t K) {
  long double sum = 0.0L;
  const long double t = static_cast<long double>(x) - x_prime;
  for (std::int64_t k = K; k >= 1; --k) {  // small terms first
    sum += std::cos(2.0L * std::numbers::pi_v<long double> * k * t) *
           std::pow(static_cast<long double>(k), -static_cast<long double>(q));
  }
  return static_cast<double>(1.0L + 2.0L * sum);
}

// Leverage scores through an explicit dense inverse.
inline Eigen::VectorXd leverage_by_inverse(const Eigen::MatrixXd& Phi, double lambda) {
  const Eigen::MatrixXd A = Phi.transpose() * Phi;
  const Eigen::MatrixXd shifted =
      A + lambda * static_cast<double>(Phi.rows()) * Eigen::MatrixXd::Identity(A.rows(), A.cols());
  return (A * shifted.inverse()).diagonal();
}

struct Certificate {
  Eigen::VectorXd u;
  double primal;  // objective at u
  double dual;    // lower bound on the optimum
};

inline double objective(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, const LossSpec& loss,
                        double lambda, const Eigen::VectorXd& u) {
  const Eigen::VectorXd f = Phi * u;
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const long double z = loss.kind == LossKind::check ? y[i] - f[i] : y[i] * f[i];
    total += split_loss_ld(loss, z);
  }
  return static_cast<double>(total / f.size()) + lambda * u.squaredNorm();
}

// Exact minimizer of (1/n) sum loss + lambda |u|^2.
//  check / hinge: coordinate ascent on the box-constrained dual
//    max_a (1/n) sum a_i c_i - |B^T a|^2 / (4 lambda n^2),
//    with rows B_i = Phi_i, c = y, a in [tau - 1, tau]^n (check) or
//    B_i = y_i Phi_i, c = 1, a in [0, 1]^n (hinge); u = B^T a / (2 lambda n).
//  logistic: damped Newton on the smooth primal; dual is set to the primal
//    minus a bound derived from the gradient norm and strong convexity.
inline Certificate certify(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, const LossSpec& loss,
                           double lambda, int sweeps = 200000) {
  const Eigen::Index n = Phi.rows();
  const Eigen::Index M = Phi.cols();
  const double dn = static_cast<double>(n);
  Certificate cert;
  if (loss.kind == LossKind::logistic) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(M);
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd m = y.cwiseProduct(Phi * u);
      Eigen::VectorXd g = 2.0 * lambda * u;
      Eigen::MatrixXd H = 2.0 * lambda * Eigen::MatrixXd::Identity(M, M);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s = 1.0 / (1.0 + std::exp(m[i]));
        g -= (y[i] * s / dn) * Phi.row(i).transpose();
        H += (s * (1.0 - s) / dn) * Phi.row(i).transpose() * Phi.row(i);
      }
      if (g.norm() < 1e-14) break;
      const Eigen::VectorXd step = H.ldlt().solve(g);
      double t = 1.0;
      const double f0 = objective(Phi, y, loss, lambda, u);
      while (t > 1e-12 && objective(Phi, y, loss, lambda, u - t * step) > f0 - 1e-4 * t * g.dot(step)) t *= 0.5;
      u -= t * step;
    }
    Eigen::VectorXd g = 2.0 * lambda * u;
    const Eigen::VectorXd m = y.cwiseProduct(Phi * u);
    for (Eigen::Index i = 0; i < n; ++i) g -= (y[i] / (1.0 + std::exp(m[i])) / dn) * Phi.row(i).transpose();
    cert.u = u;
    cert.primal = objective(Phi, y, loss, lambda, u);
    // F(u) - F* <= |grad|^2 / (2 mu) with mu = 2 lambda.
    cert.dual = cert.primal - g.squaredNorm() / (4.0 * lambda);
    return cert;
  }

  const bool check = loss.kind == LossKind::check;
  Eigen::MatrixXd B = Phi;
  Eigen::VectorXd c = y;
  double lo = check ? loss.tau - 1.0 : 0.0;
  double hi = check ? loss.tau : 1.0;
  if (!check) {
    for (Eigen::Index i = 0; i < n; ++i) B.row(i) *= y[i];
    c.setOnes();
  }
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(M);  // B^T a
  const double scale = 1.0 / (2.0 * lambda * dn * dn);
  auto dual_value = [&]() { return c.dot(a) / dn - g.squaredNorm() / (4.0 * lambda * dn * dn); };
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double bb = B.row(i).squaredNorm();
      double next;
      const double grad = c[i] / dn - B.row(i).dot(g) * scale;
      if (bb <= 0) {
        next = grad > 0 ? hi : lo;
      } else {
        next = std::clamp(a[i] + grad / (bb * scale), lo, hi);
      }
      const double delta = next - a[i];
      if (delta != 0.0) {
        g += delta * B.row(i).transpose();
        a[i] = next;
        change = std::max(change, std::abs(delta));
      }
    }
    if (change < 1e-15) break;
    if (sweep % 64 == 63) {
      const Eigen::VectorXd u = g / (2.0 * lambda * dn);
      if (objective(Phi, y, loss, lambda, u) - dual_value() < 1e-13) break;
    }
  }
  cert.u = g / (2.0 * lambda * dn);
  cert.primal = objective(Phi, y, loss, lambda, cert.u);
  cert.dual = dual_value();
  return cert;
}

}  // namespace qfeat::oracle

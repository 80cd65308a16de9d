#include "qfeat/loss.hpp"

#include <algorithm>
#include <cmath>

#include "qfeat/error.hpp"

namespace qfeat {

LossSpec LossSpec::check(double tau) {
  LossSpec s{LossKind::check, tau};
  s.validate();
  return s;
}

LossSpec LossSpec::hinge() { return {LossKind::hinge, 0.5}; }

LossSpec LossSpec::logistic() { return {LossKind::logistic, 0.5}; }

double LossSpec::lipschitz_constant() const {
  return kind == LossKind::check ? std::max(tau, 1.0 - tau) : 1.0;
}

void LossSpec::validate() const {
  if (kind == LossKind::check) require(tau > 0 && tau < 1, "check loss requires 0 < tau < 1");
}

double check_loss(double u, double tau) { return u * (tau - (u <= 0 ? 1.0 : 0.0)); }

namespace {

// log(1 + exp(-m)) without overflow.
double softplus_neg(double m) {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// 1 / (1 + exp(z)).
double sigmoid_neg(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double logistic_prox(double v, double eta) {
  // g(z) = z - v - eta / (1 + e^z) is increasing with its root in [v, v + eta].
  double lo = v;
  double hi = v + eta;
  double z = v + 0.5 * eta;
  double g_prev = INFINITY;
  for (int it = 0; it < 200; ++it) {
    const double s = sigmoid_neg(z);
    const double g = z - v - eta * s;
    if (std::abs(g) < 1e-12) return z;
    if (g > 0) {
      hi = z;
    } else {
      lo = z;
    }
    const double slope = 1.0 + eta * s * (1.0 - s);
    double next = z - g / slope;
    // Newton can bounce across the bracket for large eta; fall back to bisection
    // whenever the last step failed to halve |g|.
    if (!(next > lo && next < hi) || std::abs(g) > 0.5 * g_prev) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(z))) return next;
    g_prev = std::abs(g);
    z = next;
  }
  throw NumericError("logistic prox: safeguarded Newton did not converge in 200 iterations");
}

}  // namespace

double loss_eval(const LossSpec& spec, double y, double f) {
  switch (spec.kind) {
    case LossKind::check:
      return check_loss(y - f, spec.tau);
    case LossKind::hinge:
      require(y == 1.0 || y == -1.0, "hinge loss requires y in {-1, +1}");
      return std::max(0.0, 1.0 - y * f);
    case LossKind::logistic:
      require(y == 1.0 || y == -1.0, "logistic loss requires y in {-1, +1}");
      return softplus_neg(y * f);
  }
  return 0.0;
}

double split_loss(const LossSpec& spec, double z) {
  switch (spec.kind) {
    case LossKind::check:
      return check_loss(z, spec.tau);
    case LossKind::hinge:
      return std::max(0.0, 1.0 - z);
    case LossKind::logistic:
      return softplus_neg(z);
  }
  return 0.0;
}

double prox(const LossSpec& spec, double v, double eta) {
  require(eta > 0, "prox: eta must be positive");
  switch (spec.kind) {
    case LossKind::check: {
      const double upper = eta * spec.tau;
      const double lower = -eta * (1.0 - spec.tau);
      if (v > upper) return v - upper;
      if (v < lower) return v - lower;
      return 0.0;
    }
    case LossKind::hinge:
      if (v < 1.0 - eta) return v + eta;
      if (v <= 1.0) return 1.0;
      return v;
    case LossKind::logistic:
      return logistic_prox(v, eta);
  }
  return v;
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::check:
      return "check";
    case LossKind::hinge:
      return "hinge";
    case LossKind::logistic:
      return "logistic";
  }
  return "check";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "check") return LossKind::check;
  if (s == "hinge") return LossKind::hinge;
  if (s == "logistic") return LossKind::logistic;
  throw ArgumentError("unknown loss: " + s);
}

}  // namespace qfeat

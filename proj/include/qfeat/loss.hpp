#pragma once

#include <string>

namespace qfeat {

enum class LossKind { check, hinge, logistic };

struct LossSpec {
  LossKind kind = LossKind::check;
  double tau = 0.5;

  static LossSpec check(double tau);
  static LossSpec hinge();
  static LossSpec logistic();

  // max(tau, 1 - tau) for check, 1 otherwise.
  double lipschitz_constant() const;
  // Losses on margins y f rather than residuals y - f.
  bool uses_margin() const { return kind != LossKind::check; }
  void validate() const;
};

// rho_tau(u) = u (tau - 1{u <= 0}).
double check_loss(double u, double tau);

// check: rho_tau(y - f); hinge: max(0, 1 - y f); logistic: log(1 + exp(-y f)).
// Margin losses require y in {-1, +1}.
double loss_eval(const LossSpec& spec, double y, double f);

// The loss as a function of the split variable: residual z = y - f for check,
// margin z = y f for hinge and logistic.
double split_loss(const LossSpec& spec, double z);

// argmin_z eta * split_loss(z) + (z - v)^2 / 2.
double prox(const LossSpec& spec, double v, double eta);

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);

}  // namespace qfeat

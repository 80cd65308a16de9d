#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qfeat/types.hpp"

namespace qfeat {

// Per-column min-max scaling applied to features.
struct Normalization {
  std::vector<std::string> columns;
  Vector mins;
  Vector maxs;

  // (x - min) / (max - min); constant columns map to 0.
  Matrix apply(const MatrixRef& raw) const;
};

struct DatasetMeta {
  std::string generator;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
  std::optional<Normalization> normalization;
  std::string target_column;
  bool log_target = false;
  std::size_t dropped_rows = 0;
  std::vector<std::string> warnings;
};

// Conditional tau-quantile of y given one input row.
using TruthFn = std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&, double tau)>;

struct Dataset {
  Matrix X;
  Vector y;
  TruthFn truth;  // empty unless synthetic
  DatasetMeta meta;

  Eigen::Index size() const { return X.rows(); }
  bool has_truth() const { return static_cast<bool>(truth); }
  // truth(x_i, tau) for every row; throws ArgumentError without a truth.
  Vector truth_values(double tau) const;
  // Rows [begin, begin + count) with the same truth and meta.
  Dataset slice(Eigen::Index begin, Eigen::Index count) const;
};

// Standard normal quantile.
double normal_quantile(double p);

// x ~ U(0,1), y = spline(x, 0; r/gamma + 1/2) + eps, eps ~ N(0, 0.01).
// gamma = 0 gives the constant target 1.
Dataset gen_spline_data(double r, double gamma, Eigen::Index n, std::uint64_t seed);

// y = exp(-x1 + x2) - x2 x3 + mean(x) + eps with x ~ U(0,1)^p, eps ~ N(0,1).
Dataset gen_homoscedastic(Eigen::Index n, int p, std::uint64_t seed);

// y = sum_j beta_j sin(2 pi x_j) + (1 + mean(x)) (eps - z_tau), x ~ U(0,1)^3,
// beta_j ~ U(0,1) drawn once per dataset.
Dataset gen_heteroscedastic(Eigen::Index n, double tau, std::uint64_t seed);

// Homoscedastic regression function without noise.
double homoscedastic_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Reads a headed CSV. Feature columns are min-max normalized over the whole
// file; rows with a missing or non-numeric selected cell are dropped and
// counted. An empty feature list selects every column except the target.
Dataset load_csv_dataset(const std::string& path, const std::string& target_column,
                         const std::vector<std::string>& feature_columns = {},
                         bool log_target = false);

// Reads the named columns of a CSV and applies an existing normalization.
// Any unparsable cell is an error, so output rows align with input rows.
Matrix load_csv_features(const std::string& path, const Normalization& norm);

}  // namespace qfeat

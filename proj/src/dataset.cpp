#include "qfeat/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "qfeat/error.hpp"
#include "qfeat/kernel.hpp"
#include "qfeat/rng.hpp"

namespace qfeat {

Matrix Normalization::apply(const MatrixRef& raw) const {
  require(raw.cols() == mins.size(), "normalization: column count mismatch");
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double span = maxs[j] - mins[j];
    if (span > 0) {
      out.col(j) = (raw.col(j).array() - mins[j]) / span;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

Vector Dataset::truth_values(double tau) const {
  require(has_truth(), "dataset has no truth function");
  Vector t(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) t[i] = truth(X.row(i), tau);
  return t;
}

Dataset Dataset::slice(Eigen::Index begin, Eigen::Index count) const {
  require(begin >= 0 && count >= 0 && begin + count <= size(), "dataset slice out of range");
  Dataset out;
  out.X = X.middleRows(begin, count);
  out.y = y.segment(begin, count);
  out.truth = truth;
  out.meta = meta;
  return out;
}

double normal_quantile(double p) {
  require(p > 0 && p < 1, "normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Dataset gen_spline_data(double r, double gamma, Eigen::Index n, std::uint64_t seed) {
  require(r > 0 && r <= 1, "gen_spline_data: r must lie in (0, 1]");
  require(gamma >= 0 && gamma <= 1, "gen_spline_data: gamma must lie in [0, 1]");
  require(n >= 1, "gen_spline_data: n must be >= 1");
  const double order = gamma > 0 ? r / gamma + 0.5 : std::numeric_limits<double>::infinity();
  auto coeffs = std::make_shared<const std::vector<double>>(
      spline_coefficients(order, spline_truncation(order)));

  Dataset d;
  d.X.resize(n, 1);
  d.y.resize(n);
  Philox rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = rng.uniform();
    d.X(i, 0) = x;
    d.y[i] = spline_series(spline_lag(x, 0.0), *coeffs) + 0.1 * rng.normal();
  }
  d.truth = [coeffs](const Eigen::Ref<const Eigen::RowVectorXd>& x, double tau) {
    return spline_series(spline_lag(x[0], 0.0), *coeffs) + 0.1 * normal_quantile(tau);
  };
  d.meta.generator = "spline";
  d.meta.params = {{"r", r}, {"gamma", gamma}, {"target_order", order}, {"noise_sd", 0.1}};
  d.meta.seed = seed;
  if (gamma == 0) d.meta.warnings.push_back("gamma = 0: constant target (limit rule)");
  return d;
}

double homoscedastic_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return std::exp(-x[0] + x[1]) - x[1] * x[2] + x.mean();
}

Dataset gen_homoscedastic(Eigen::Index n, int p, std::uint64_t seed) {
  require(p >= 3, "gen_homoscedastic: p must be >= 3");
  require(n >= 1, "gen_homoscedastic: n must be >= 1");
  Dataset d;
  d.X.resize(n, p);
  d.y.resize(n);
  Philox rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.X(i, j) = rng.uniform();
    d.y[i] = homoscedastic_mean(d.X.row(i)) + rng.normal();
  }
  d.truth = [](const Eigen::Ref<const Eigen::RowVectorXd>& x, double tau) {
    return homoscedastic_mean(x) + normal_quantile(tau);
  };
  d.meta.generator = "homoscedastic";
  d.meta.params = {{"p", p}};
  d.meta.seed = seed;
  return d;
}

Dataset gen_heteroscedastic(Eigen::Index n, double tau, std::uint64_t seed) {
  require(tau > 0 && tau < 1, "gen_heteroscedastic: tau must lie in (0, 1)");
  require(n >= 1, "gen_heteroscedastic: n must be >= 1");
  Philox rng(seed);
  const Eigen::Vector3d beta(rng.uniform(), rng.uniform(), rng.uniform());
  const double z_tau = normal_quantile(tau);
  auto signal = [beta](const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += beta[j] * std::sin(2.0 * std::numbers::pi * x[j]);
    return s;
  };

  Dataset d;
  d.X.resize(n, 3);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) d.X(i, j) = rng.uniform();
    const double scale = 1.0 + d.X.row(i).mean();
    d.y[i] = signal(d.X.row(i)) + scale * (rng.normal() - z_tau);
  }
  // At the generating level the quantile is the signal; other levels shift by
  // the scaled normal quantile difference.
  d.truth = [signal, z_tau](const Eigen::Ref<const Eigen::RowVectorXd>& x, double t) {
    return signal(x) + (1.0 + x.mean()) * (normal_quantile(t) - z_tau);
  };
  d.meta.generator = "heteroscedastic";
  d.meta.params = {{"tau", tau}, {"beta1", beta[0]}, {"beta2", beta[1]}, {"beta3", beta[2]}};
  d.meta.seed = seed;
  return d;
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cell += ch;
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open CSV file: " + path);
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (t.header.empty()) {
      t.header = split_csv_line(line);
    } else {
      t.rows.push_back(split_csv_line(line));
    }
  }
  require(!t.header.empty(), "CSV file has no header: " + path);
  return t;
}

std::size_t column_index(const CsvTable& t, const std::string& name) {
  auto it = std::find(t.header.begin(), t.header.end(), name);
  require(it != t.header.end(), "CSV column not found: " + name);
  return static_cast<std::size_t>(std::distance(t.header.begin(), it));
}

}  // namespace

Dataset load_csv_dataset(const std::string& path, const std::string& target_column,
                         const std::vector<std::string>& feature_columns, bool log_target) {
  const CsvTable table = read_csv(path);
  const std::size_t target_idx = column_index(table, target_column);
  std::vector<std::string> names = feature_columns;
  if (names.empty()) {
    for (const auto& h : table.header) {
      if (h != target_column) names.push_back(h);
    }
  }
  require(!names.empty(), "CSV: no feature columns selected");
  std::vector<std::size_t> idx;
  for (const auto& name : names) idx.push_back(column_index(table, name));

  std::vector<std::vector<double>> kept;
  std::vector<double> targets;
  std::size_t dropped = 0;
  for (const auto& row : table.rows) {
    std::vector<double> values;
    bool ok = row.size() == table.header.size();
    for (std::size_t k = 0; ok && k < idx.size(); ++k) {
      auto v = parse_number(row[idx[k]]);
      if (!v) ok = false;
      else values.push_back(*v);
    }
    std::optional<double> target = ok ? parse_number(row[target_idx]) : std::nullopt;
    if (target && log_target) {
      target = *target > 0 ? std::optional<double>(std::log(*target)) : std::nullopt;
    }
    if (!ok || !target) {
      ++dropped;
      continue;
    }
    kept.push_back(std::move(values));
    targets.push_back(*target);
  }
  require(kept.size() >= 2, "CSV: need at least 2 usable rows");

  const auto n = static_cast<Eigen::Index>(kept.size());
  const auto d = static_cast<Eigen::Index>(names.size());
  Matrix raw(n, d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) raw(i, j) = kept[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y[i] = targets[static_cast<std::size_t>(i)];
  }

  Normalization norm{names, raw.colwise().minCoeff().transpose(), raw.colwise().maxCoeff().transpose()};
  Dataset out;
  out.X = norm.apply(raw);
  out.y = std::move(y);
  out.meta.generator = "csv";
  out.meta.target_column = target_column;
  out.meta.log_target = log_target;
  out.meta.dropped_rows = dropped;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(norm.maxs[j] > norm.mins[j])) {
      out.meta.warnings.push_back("constant column normalized to 0: " + names[static_cast<std::size_t>(j)]);
    }
  }
  if (dropped > 0) {
    out.meta.warnings.push_back("dropped " + std::to_string(dropped) + " rows with missing or non-numeric cells");
  }
  out.meta.normalization = std::move(norm);
  return out;
}

Matrix load_csv_features(const std::string& path, const Normalization& norm) {
  const CsvTable table = read_csv(path);
  std::vector<std::size_t> idx;
  for (const auto& name : norm.columns) idx.push_back(column_index(table, name));
  Matrix raw(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto v = idx[k] < row.size() ? parse_number(row[idx[k]]) : std::nullopt;
      if (!v) {
        throw ArgumentError("CSV row " + std::to_string(i + 1) + ": column '" + norm.columns[k] +
                            "' is not numeric");
      }
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = *v;
    }
  }
  return norm.apply(raw);
}

}  // namespace qfeat

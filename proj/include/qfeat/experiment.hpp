#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qfeat/dataset.hpp"
#include "qfeat/features.hpp"
#include "qfeat/solver.hpp"
#include "qfeat/theory.hpp"

namespace qfeat {

// ---- metrics ---------------------------------------------------------------

// Mean check loss of predictions against targets.
double pqe(const VectorRef& predictions, const VectorRef& y, double tau);
double pqe(const Model& model, const Dataset& test, double tau);

struct ExcessRisk {
  double value = 0.0;
  // Set when a Monte Carlo estimate below -1e-6 was raised to -1e-6.
  bool clamped = false;
};

inline constexpr double kExcessRiskFloor = -1e-6;

// (1/n) sum [rho(y - f_hat) - rho(y - f*)] on a dataset carrying its truth.
ExcessRisk empirical_excess_risk(const VectorRef& predictions, const Dataset& test, double tau);
ExcessRisk empirical_excess_risk(const Model& model, const Dataset& test, double tau);

// sqrt(mean (f_hat - f*)^2) over the test inputs.
double l2_error(const VectorRef& predictions, const Dataset& test, double tau);

// ---- lambda selection ------------------------------------------------------

// {10^(0.5 s) : s = -20..2}, ascending.
std::vector<double> lambda_grid();

struct GridPoint {
  double lambda;
  double validation_pqe;
  int iterations;
  bool failed = false;
};

struct GridSearchResult {
  double lambda_star;
  std::vector<GridPoint> records;
};

// Fits one model per grid value and keeps the smallest validation PQE, with
// ties resolved toward the larger lambda. `map_for` supplies the features for a
// given lambda (leverage sampling depends on it).
GridSearchResult grid_search_lambda(const Dataset& train, const Dataset& val, double tau,
                                    const std::function<FeatureMap(double)>& map_for,
                                    const SolverConfig& cfg,
                                    const std::vector<double>& grid = lambda_grid());

GridSearchResult grid_search_lambda(const Dataset& train, const Dataset& val, double tau,
                                    const FeatureMap& map, const SolverConfig& cfg,
                                    const std::vector<double>& grid = lambda_grid());

// ---- experiment specification ------------------------------------------------

enum class GeneratorKind { spline, homoscedastic, heteroscedastic, csv };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::homoscedastic;
  double r = 0.5;      // spline
  double gamma = 0.1;  // spline
  int p = 3;           // homoscedastic
  std::string path;    // csv
  std::string target;  // csv
  std::vector<std::string> columns;
  bool log_target = false;
};

enum class LambdaRuleKind { grid, schedule, fixed };
enum class Method { random_features, exact };

struct ExperimentSpec {
  GeneratorSpec generator;
  double tau = 0.5;
  std::vector<std::int64_t> n_train{1000};
  std::int64_t n_val = 1000;
  std::int64_t n_test = 10000;
  // Fixed feature count unless `feature_schedule` is set.
  std::int64_t M = 50;
  bool feature_schedule = false;
  double C_M = 1.0;
  // Defaults to (r, gamma, alpha = gamma) for the spline generator.
  std::optional<RegularitySpec> regularity;
  Sampling sampling = Sampling::uniform;
  LeverageOptions leverage;
  LambdaRuleKind lambda_rule = LambdaRuleKind::grid;
  double lambda_value = 1e-3;
  Method method = Method::random_features;
  double bandwidth = 1.0;
  int repetitions = 1;
  std::uint64_t base_seed = 0;
  SolverConfig solver = harness_solver_defaults();

  static SolverConfig harness_solver_defaults();

  void validate() const;
  KernelSpec kernel() const;
  RegularitySpec resolved_regularity() const;
};

ExperimentSpec experiment_spec_from_json(const std::string& json_text);
std::string experiment_spec_to_json(const ExperimentSpec& spec);

struct ExperimentRecord {
  std::string generator;
  double tau = 0.0;
  std::string method;
  std::string sampling;
  std::int64_t n = 0;
  std::int64_t M = 0;
  double lambda = 0.0;
  int repetition = 0;
  std::uint64_t seed = 0;
  double pqe = 0.0;
  std::optional<double> excess_risk;
  bool excess_risk_clamped = false;
  std::optional<double> l2_error;
  double train_seconds = 0.0;
  int solver_iterations = 0;
  bool converged = false;
  bool failed = false;
  std::string error;
};

using RecordSink = std::function<void(const ExperimentRecord&)>;

// One record per (n, repetition), ordered by n then repetition. Tasks run in
// parallel; each task's random streams derive only from (base_seed, n, rep).
// The sink, if given, sees records as they complete (serialized).
std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec,
                                             const RecordSink& sink = {});

// Runs a single (n, repetition) task.
ExperimentRecord run_task(const ExperimentSpec& spec, std::int64_t n, int repetition);

std::string record_csv_header();
// Floats use 17 significant digits; missing metrics are empty fields.
std::string record_csv_row(const ExperimentRecord& rec);
void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);

}  // namespace qfeat

#include "qfeat/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "qfeat/error.hpp"
#include "qfeat/parallel.hpp"
#include "qfeat/rng.hpp"

namespace qfeat {

using nlohmann::json;

double pqe(const VectorRef& predictions, const VectorRef& y, double tau) {
  require(predictions.size() == y.size(), "pqe: length mismatch");
  require(y.size() >= 1, "pqe: empty test set");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) total += check_loss(y[i] - predictions[i], tau);
  return total / static_cast<double>(y.size());
}

double pqe(const Model& model, const Dataset& test, double tau) {
  return pqe(predict(model, test.X), test.y, tau);
}

ExcessRisk empirical_excess_risk(const VectorRef& predictions, const Dataset& test, double tau) {
  require(test.has_truth(), "excess risk: test set carries no truth");
  require(predictions.size() == test.size(), "excess risk: length mismatch");
  const Vector truth = test.truth_values(tau);
  double total = 0.0;
  for (Eigen::Index i = 0; i < test.size(); ++i) {
    total += check_loss(test.y[i] - predictions[i], tau) - check_loss(test.y[i] - truth[i], tau);
  }
  ExcessRisk out{total / static_cast<double>(test.size()), false};
  if (out.value < kExcessRiskFloor) {
    out.value = kExcessRiskFloor;
    out.clamped = true;
  }
  return out;
}

ExcessRisk empirical_excess_risk(const Model& model, const Dataset& test, double tau) {
  return empirical_excess_risk(predict(model, test.X), test, tau);
}

double l2_error(const VectorRef& predictions, const Dataset& test, double tau) {
  const Vector truth = test.truth_values(tau);
  require(predictions.size() == truth.size(), "l2_error: length mismatch");
  return std::sqrt((predictions - truth).squaredNorm() / static_cast<double>(truth.size()));
}

std::vector<double> lambda_grid() {
  std::vector<double> grid;
  for (int s = -20; s <= 2; ++s) grid.push_back(std::pow(10.0, 0.5 * s));
  return grid;
}

namespace {

// Scans from the largest lambda so ties keep the stronger regularization.
GridSearchResult select_best(const std::vector<double>& grid, std::vector<GridPoint> points) {
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });
  std::size_t best = order.front();
  for (std::size_t k : order) {
    if (points[k].validation_pqe < points[best].validation_pqe) best = k;
  }
  return {grid[best], std::move(points)};
}

// Walks the grid from strong to weak regularization, handing each fit the
// ADMM state of the previous one. `evaluate` fits one lambda; a throw marks
// the point failed and resets the warm start.
GridSearchResult search(const std::vector<double>& grid,
                        const std::function<GridPoint(double, AdmmState&)>& evaluate) {
  require(!grid.empty(), "grid search: empty grid");
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });
  std::vector<GridPoint> points(grid.size());
  AdmmState state;
  for (std::size_t k : order) {
    try {
      points[k] = evaluate(grid[k], state);
    } catch (const std::exception&) {
      points[k] = GridPoint{grid[k], std::numeric_limits<double>::infinity(), 0, true};
      state = AdmmState{};
    }
  }
  return select_best(grid, std::move(points));
}

}  // namespace

GridSearchResult grid_search_lambda(const Dataset& train, const Dataset& val, double tau,
                                    const std::function<FeatureMap(double)>& map_for,
                                    const SolverConfig& cfg, const std::vector<double>& grid) {
  const LossSpec loss = LossSpec::check(tau);
  // The warm start lives in sample space, so it carries over even though the
  // features change with lambda.
  return search(grid, [&](double lambda, AdmmState& state) {
    const FeatureMap map = map_for(lambda);
    const Model model = fit_admm(feature_matrix(map, train.X), train.y, loss, lambda, cfg, &state);
    return GridPoint{lambda, pqe(predict_linear(model, feature_matrix(map, val.X)), val.y, tau),
                     model.diagnostics.iterations};
  });
}

GridSearchResult grid_search_lambda(const Dataset& train, const Dataset& val, double tau,
                                    const FeatureMap& map, const SolverConfig& cfg,
                                    const std::vector<double>& grid) {
  const LossSpec loss = LossSpec::check(tau);
  const Matrix Phi_train = feature_matrix(map, train.X);
  const Matrix Phi_val = feature_matrix(map, val.X);
  return search(grid, [&](double lambda, AdmmState& state) {
    const Model model = fit_admm(Phi_train, train.y, loss, lambda, cfg, &state);
    return GridPoint{lambda, pqe(predict_linear(model, Phi_val), val.y, tau),
                     model.diagnostics.iterations};
  });
}

// ---- spec --------------------------------------------------------------------

SolverConfig ExperimentSpec::harness_solver_defaults() {
  SolverConfig cfg;
  cfg.tol_primal = 1e-6;
  cfg.tol_dual = 1e-6;
  cfg.max_iters = 20000;
  return cfg;
}

void ExperimentSpec::validate() const {
  require(tau > 0 && tau < 1, "experiment: tau must lie in (0, 1)");
  require(!n_train.empty(), "experiment: n_train must not be empty");
  for (auto n : n_train) require(n >= 1, "experiment: n_train entries must be >= 1");
  require(n_val >= 1 && n_test >= 1, "experiment: n_val and n_test must be >= 1");
  require(repetitions >= 1, "experiment: repetitions must be >= 1");
  require(feature_schedule || M >= 1, "experiment: M must be >= 1");
  require(C_M > 0, "experiment: C_M must be positive");
  require(bandwidth > 0, "experiment: bandwidth must be positive");
  if (lambda_rule == LambdaRuleKind::fixed) require(lambda_value > 0, "experiment: lambda must be positive");
  if (generator.kind == GeneratorKind::homoscedastic) require(generator.p >= 3, "experiment: p must be >= 3");
  if (generator.kind == GeneratorKind::csv) require(!generator.path.empty() && !generator.target.empty(),
                                                    "experiment: csv generator needs path and target");
  if (feature_schedule || lambda_rule == LambdaRuleKind::schedule) resolved_regularity().validate();
  if (method == Method::exact) require(sampling == Sampling::uniform, "experiment: exact method has no sampling");
  solver.validate();
}

KernelSpec ExperimentSpec::kernel() const {
  if (generator.kind == GeneratorKind::spline) {
    const double q = generator.gamma > 0 ? 1.0 / generator.gamma : std::numeric_limits<double>::infinity();
    return KernelSpec::spline(q);
  }
  return KernelSpec::gaussian(bandwidth);
}

RegularitySpec ExperimentSpec::resolved_regularity() const {
  if (regularity) return *regularity;
  require(generator.kind == GeneratorKind::spline,
          "experiment: schedules need a regularity spec for non-spline generators");
  return RegularitySpec{generator.r, generator.gamma, generator.gamma};
}

namespace {

std::string generator_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::spline: return "spline";
    case GeneratorKind::homoscedastic: return "homoscedastic";
    case GeneratorKind::heteroscedastic: return "heteroscedastic";
    case GeneratorKind::csv: return "csv";
  }
  return "spline";
}

GeneratorKind generator_from_name(const std::string& s) {
  if (s == "spline") return GeneratorKind::spline;
  if (s == "homoscedastic") return GeneratorKind::homoscedastic;
  if (s == "heteroscedastic") return GeneratorKind::heteroscedastic;
  if (s == "csv") return GeneratorKind::csv;
  throw ArgumentError("unknown generator: " + s);
}

std::string lambda_rule_name(LambdaRuleKind k) {
  switch (k) {
    case LambdaRuleKind::grid: return "grid";
    case LambdaRuleKind::schedule: return "schedule";
    case LambdaRuleKind::fixed: return "fixed";
  }
  return "grid";
}

std::string method_name(Method m) { return m == Method::exact ? "exact" : "rf"; }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

ExperimentSpec experiment_spec_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("experiment spec: invalid JSON: ") + e.what());
  }
  ExperimentSpec s;
  try {
    const json& g = j.at("generator");
    s.generator.kind = generator_from_name(g.at("kind").get<std::string>());
    s.generator.r = get_or(g, "r", s.generator.r);
    s.generator.gamma = get_or(g, "gamma", s.generator.gamma);
    s.generator.p = get_or(g, "p", s.generator.p);
    s.generator.path = get_or<std::string>(g, "path", "");
    s.generator.target = get_or<std::string>(g, "target", "");
    s.generator.columns = get_or(g, "columns", std::vector<std::string>{});
    s.generator.log_target = get_or(g, "log_target", false);

    s.tau = get_or(j, "tau", s.tau);
    if (j.contains("n_train")) {
      const json& nt = j.at("n_train");
      s.n_train = nt.is_array() ? nt.get<std::vector<std::int64_t>>()
                                : std::vector<std::int64_t>{nt.get<std::int64_t>()};
    }
    s.n_val = get_or(j, "n_val", s.n_val);
    s.n_test = get_or(j, "n_test", s.n_test);

    if (j.contains("features")) {
      const json& f = j.at("features");
      const auto rule = get_or<std::string>(f, "rule", "fixed");
      if (rule == "fixed") {
        s.M = f.at("M").get<std::int64_t>();
      } else if (rule == "schedule") {
        s.feature_schedule = true;
        s.C_M = get_or(f, "C_M", s.C_M);
      } else {
        throw ArgumentError("experiment spec: unknown feature rule " + rule);
      }
    }
    if (j.contains("regularity")) {
      const json& r = j.at("regularity");
      RegularitySpec reg;
      reg.r = r.at("r").get<double>();
      reg.gamma = r.at("gamma").get<double>();
      reg.alpha = get_or(r, "alpha", 1.0);
      s.regularity = reg;
    }
    if (j.contains("sampling")) {
      const json& sm = j.at("sampling");
      if (sm.is_string()) {
        s.sampling = sampling_from_string(sm.get<std::string>());
      } else {
        s.sampling = sampling_from_string(sm.at("kind").get<std::string>());
        s.leverage.pool_factor = get_or(sm, "pool_factor", s.leverage.pool_factor);
        s.leverage.min_pool = get_or<Eigen::Index>(sm, "min_pool", s.leverage.min_pool);
        s.leverage.scoring_lambda = get_or(sm, "scoring_lambda", s.leverage.scoring_lambda);
      }
    }
    if (j.contains("lambda")) {
      const json& l = j.at("lambda");
      const auto rule = l.is_string() ? l.get<std::string>() : l.at("rule").get<std::string>();
      if (rule == "grid") {
        s.lambda_rule = LambdaRuleKind::grid;
      } else if (rule == "schedule") {
        s.lambda_rule = LambdaRuleKind::schedule;
      } else if (rule == "fixed") {
        s.lambda_rule = LambdaRuleKind::fixed;
        s.lambda_value = l.at("value").get<double>();
      } else {
        throw ArgumentError("experiment spec: unknown lambda rule " + rule);
      }
    }
    const auto method = get_or<std::string>(j, "method", "rf");
    if (method != "rf" && method != "exact") throw ArgumentError("experiment spec: unknown method " + method);
    s.method = method == "exact" ? Method::exact : Method::random_features;
    s.bandwidth = get_or(j, "bandwidth", s.bandwidth);
    s.repetitions = get_or(j, "repetitions", s.repetitions);
    s.base_seed = get_or(j, "base_seed", s.base_seed);
    if (j.contains("solver")) {
      const json& c = j.at("solver");
      s.solver.penalty_rho = get_or(c, "penalty_rho", s.solver.penalty_rho);
      s.solver.max_iters = get_or(c, "max_iters", s.solver.max_iters);
      s.solver.tol_primal = get_or(c, "tol_primal", s.solver.tol_primal);
      s.solver.tol_dual = get_or(c, "tol_dual", s.solver.tol_dual);
      s.solver.adaptive_rho = get_or(c, "adaptive_rho", s.solver.adaptive_rho);
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string experiment_spec_to_json(const ExperimentSpec& s) {
  json g = {{"kind", generator_name(s.generator.kind)}};
  switch (s.generator.kind) {
    case GeneratorKind::spline:
      g["r"] = s.generator.r;
      g["gamma"] = s.generator.gamma;
      break;
    case GeneratorKind::homoscedastic:
      g["p"] = s.generator.p;
      break;
    case GeneratorKind::heteroscedastic:
      break;
    case GeneratorKind::csv:
      g["path"] = s.generator.path;
      g["target"] = s.generator.target;
      g["columns"] = s.generator.columns;
      g["log_target"] = s.generator.log_target;
      break;
  }
  json j = {{"generator", g},
            {"tau", s.tau},
            {"n_train", s.n_train},
            {"n_val", s.n_val},
            {"n_test", s.n_test},
            {"method", method_name(s.method)},
            {"bandwidth", s.bandwidth},
            {"repetitions", s.repetitions},
            {"base_seed", s.base_seed}};
  j["features"] = s.feature_schedule ? json{{"rule", "schedule"}, {"C_M", s.C_M}}
                                     : json{{"rule", "fixed"}, {"M", s.M}};
  if (s.regularity) {
    j["regularity"] = {{"r", s.regularity->r}, {"gamma", s.regularity->gamma}, {"alpha", s.regularity->alpha}};
  }
  j["sampling"] = {{"kind", to_string(s.sampling)},
                   {"pool_factor", s.leverage.pool_factor},
                   {"min_pool", s.leverage.min_pool},
                   {"scoring_lambda", s.leverage.scoring_lambda}};
  j["lambda"] = {{"rule", lambda_rule_name(s.lambda_rule)}};
  if (s.lambda_rule == LambdaRuleKind::fixed) j["lambda"]["value"] = s.lambda_value;
  j["solver"] = {{"penalty_rho", s.solver.penalty_rho},
                 {"max_iters", s.solver.max_iters},
                 {"tol_primal", s.solver.tol_primal},
                 {"tol_dual", s.solver.tol_dual},
                 {"adaptive_rho", s.solver.adaptive_rho}};
  return j.dump(2);
}

// ---- execution ---------------------------------------------------------------

namespace {

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

Dataset generate(const ExperimentSpec& spec, Eigen::Index total, std::uint64_t seed) {
  switch (spec.generator.kind) {
    case GeneratorKind::spline:
      return gen_spline_data(spec.generator.r, spec.generator.gamma, total, seed);
    case GeneratorKind::homoscedastic:
      return gen_homoscedastic(total, spec.generator.p, seed);
    case GeneratorKind::heteroscedastic:
      return gen_heteroscedastic(total, spec.tau, seed);
    case GeneratorKind::csv:
      break;
  }
  throw ArgumentError("generate: csv data is loaded, not generated");
}

Splits make_splits(const ExperimentSpec& spec, const Dataset* csv, std::int64_t n,
                   std::uint64_t task_seed) {
  const bool needs_val = spec.lambda_rule == LambdaRuleKind::grid;
  const std::int64_t n_val = needs_val ? spec.n_val : 0;
  Dataset pool;
  std::int64_t n_test = spec.n_test;
  if (csv != nullptr) {
    // Random split of the loaded rows; the test set takes what remains, up to n_test.
    require(n + n_val < csv->size(), "experiment: CSV has too few rows for the requested split");
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(csv->size()));
    std::iota(perm.begin(), perm.end(), 0);
    Philox rng(derive_seed(task_seed, streams::kSplit));
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      std::swap(perm[i], perm[rng.below(i + 1)]);
    }
    n_test = std::min<std::int64_t>(n_test, csv->size() - n - n_val);
    pool.X.resize(n + n_val + n_test, csv->X.cols());
    pool.y.resize(n + n_val + n_test);
    for (Eigen::Index i = 0; i < pool.X.rows(); ++i) {
      pool.X.row(i) = csv->X.row(perm[static_cast<std::size_t>(i)]);
      pool.y[i] = csv->y[perm[static_cast<std::size_t>(i)]];
    }
    pool.meta = csv->meta;
  } else {
    pool = generate(spec, n + n_val + n_test, derive_seed(task_seed, streams::kTrain));
  }
  Splits s;
  s.train = pool.slice(0, n);
  s.val = pool.slice(n, n_val);
  s.test = pool.slice(n + n_val, n_test);
  return s;
}

ExperimentRecord execute(const ExperimentSpec& spec, const Dataset* csv, std::int64_t n,
                         int repetition) {
  ExperimentRecord rec;
  rec.generator = generator_name(spec.generator.kind);
  rec.tau = spec.tau;
  rec.method = method_name(spec.method);
  rec.sampling = spec.method == Method::exact ? "none" : to_string(spec.sampling);
  rec.n = n;
  rec.repetition = repetition;
  rec.seed = derive_seed(spec.base_seed, static_cast<std::uint64_t>(n),
                         static_cast<std::uint64_t>(repetition));
  try {
    const Splits data = make_splits(spec, csv, n, rec.seed);
    const KernelSpec kernel = spec.kernel();
    const LossSpec loss = LossSpec::check(spec.tau);

    rec.M = spec.M;
    std::optional<RateSchedule> schedule;
    if (spec.feature_schedule || spec.lambda_rule == LambdaRuleKind::schedule) {
      schedule = rate_schedule(spec.resolved_regularity(), std::max<std::int64_t>(n, 2), spec.C_M);
    }
    if (spec.feature_schedule) rec.M = schedule->M_min;
    if (spec.method == Method::exact) rec.M = 0;

    const std::uint64_t feature_seed = derive_seed(rec.seed, streams::kFeaturePool);
    auto map_for = [&](double lambda) {
      if (spec.sampling == Sampling::leverage) {
        return sample_leverage_features(kernel, rec.M, data.train.X, lambda,
                                        derive_seed(rec.seed, streams::kResample), spec.leverage);
      }
      return sample_uniform_features(kernel, rec.M, feature_seed, data.train.X.cols());
    };

    const auto start = std::chrono::steady_clock::now();
    switch (spec.lambda_rule) {
      case LambdaRuleKind::fixed:
        rec.lambda = spec.lambda_value;
        break;
      case LambdaRuleKind::schedule:
        rec.lambda = schedule->lambda;
        break;
      case LambdaRuleKind::grid:
        if (spec.method == Method::exact) {
          const Matrix K = gram_matrix(data.train.X, data.train.X, kernel);
          const Matrix K_val = gram_matrix(data.val.X, data.train.X, kernel);
          rec.lambda = search(lambda_grid(), [&](double lambda, AdmmState&) {
                         const Model m = fit_exact_kqr(K, data.train.y, spec.tau, lambda, spec.solver);
                         return GridPoint{lambda, pqe(K_val * m.coefficients, data.val.y, spec.tau),
                                          m.diagnostics.iterations};
                       }).lambda_star;
        } else if (spec.sampling == Sampling::leverage) {
          rec.lambda = grid_search_lambda(data.train, data.val, spec.tau, map_for, spec.solver).lambda_star;
        } else {
          rec.lambda = grid_search_lambda(data.train, data.val, spec.tau, map_for(0.0), spec.solver).lambda_star;
        }
        break;
    }

    Model model;
    if (spec.method == Method::exact) {
      model = fit_exact_kqr(kernel, data.train.X, data.train.y, spec.tau, rec.lambda, spec.solver);
    } else {
      model = fit_random_features(std::make_shared<const FeatureMap>(map_for(rec.lambda)),
                                  data.train.X, data.train.y, loss, rec.lambda, spec.solver);
    }
    rec.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.solver_iterations = model.diagnostics.iterations;
    rec.converged = model.diagnostics.converged;

    const Vector pred = predict(model, data.test.X);
    rec.pqe = pqe(pred, data.test.y, spec.tau);
    if (data.test.has_truth()) {
      const ExcessRisk er = empirical_excess_risk(pred, data.test, spec.tau);
      rec.excess_risk = er.value;
      rec.excess_risk_clamped = er.clamped;
      rec.l2_error = l2_error(pred, data.test, spec.tau);
    }
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

std::unique_ptr<Dataset> load_csv_for(const ExperimentSpec& spec) {
  if (spec.generator.kind != GeneratorKind::csv) return nullptr;
  return std::make_unique<Dataset>(load_csv_dataset(spec.generator.path, spec.generator.target,
                                                    spec.generator.columns, spec.generator.log_target));
}

}  // namespace

ExperimentRecord run_task(const ExperimentSpec& spec, std::int64_t n, int repetition) {
  spec.validate();
  const auto csv = load_csv_for(spec);
  return execute(spec, csv.get(), n, repetition);
}

std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec, const RecordSink& sink) {
  spec.validate();
  const auto csv = load_csv_for(spec);
  const auto reps = static_cast<std::size_t>(spec.repetitions);
  const std::size_t tasks = spec.n_train.size() * reps;
  std::vector<ExperimentRecord> records(tasks);
  const auto count = static_cast<std::ptrdiff_t>(tasks);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const auto idx = static_cast<std::size_t>(t);
    records[idx] = execute(spec, csv.get(), spec.n_train[idx / reps], static_cast<int>(idx % reps));
    if (sink) {
#pragma omp critical(qfeat_record_sink)
      sink(records[idx]);
    }
  }
  return records;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string record_csv_header() {
  return "generator,tau,method,sampling,n,M,lambda,repetition,seed,pqe,excess_risk,"
         "excess_risk_clamped,l2_error,train_seconds,solver_iterations,converged,status,error";
}

std::string record_csv_row(const ExperimentRecord& r) {
  std::string row;
  row += r.generator + "," + fmt(r.tau) + "," + r.method + "," + r.sampling + ",";
  row += std::to_string(r.n) + "," + std::to_string(r.M) + "," + fmt(r.lambda) + ",";
  row += std::to_string(r.repetition) + "," + std::to_string(r.seed) + ",";
  row += (r.failed ? std::string() : fmt(r.pqe)) + ",";
  row += (r.excess_risk ? fmt(*r.excess_risk) : std::string()) + ",";
  row += std::string(r.excess_risk_clamped ? "1" : "0") + ",";
  row += (r.l2_error ? fmt(*r.l2_error) : std::string()) + ",";
  row += fmt(r.train_seconds) + "," + std::to_string(r.solver_iterations) + ",";
  row += std::string(r.converged ? "1" : "0") + ",";
  row += std::string(r.failed ? "failed" : "ok") + "," + quote(r.error);
  return row;
}

void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << record_csv_header() << '\n';
  for (const auto& r : records) out << record_csv_row(r) << '\n';
}

}  // namespace qfeat

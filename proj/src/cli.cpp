#include "qfeat/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "qfeat/dataset.hpp"
#include "qfeat/error.hpp"
#include "qfeat/experiment.hpp"
#include "qfeat/rng.hpp"
#include "qfeat/serialize.hpp"
#include "qfeat/solver.hpp"
#include "qfeat/theory.hpp"

namespace qfeat {

using nlohmann::json;

namespace {

struct FitOptions {
  std::string data;
  std::string target;
  std::vector<std::string> columns;
  bool log_target = false;
  double tau = 0.5;
  std::string loss = "check";
  double lambda = 0.0;
  bool lambda_grid = false;
  double val_fraction = 0.2;
  std::int64_t features = 50;
  std::string sampling = "uniform";
  std::string kernel = "gaussian";
  double bandwidth = 1.0;
  double spline_order = 2.0;
  bool exact = false;
  std::uint64_t seed = 0;
  int max_iters = 10'000;
  double tol = 1e-8;
  std::string out;
};

struct PredictOptions {
  std::string model;
  std::string data;
  std::string out;
};

struct ExperimentOptions {
  std::string spec;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

struct RatesOptions {
  double r = 0.5;
  double gamma = 1.0;
  double alpha = 1.0;
  std::int64_t n = 1000;
  double C_M = 1.0;
  std::string out;
};

void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    fallback << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ArgumentError("cannot write " + path);
  f << text;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json normalization_to_json(const Normalization& n) {
  return {{"columns", n.columns},
          {"min", std::vector<double>(n.mins.data(), n.mins.data() + n.mins.size())},
          {"max", std::vector<double>(n.maxs.data(), n.maxs.data() + n.maxs.size())}};
}

Normalization normalization_from_json(const json& j) {
  Normalization n;
  n.columns = j.at("columns").get<std::vector<std::string>>();
  const auto mins = j.at("min").get<std::vector<double>>();
  const auto maxs = j.at("max").get<std::vector<double>>();
  require(mins.size() == n.columns.size() && maxs.size() == n.columns.size(),
          "model JSON: normalization arrays do not match columns");
  n.mins = Eigen::Map<const Vector>(mins.data(), static_cast<Eigen::Index>(mins.size()));
  n.maxs = Eigen::Map<const Vector>(maxs.data(), static_cast<Eigen::Index>(maxs.size()));
  return n;
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  const Dataset all = load_csv_dataset(o.data, o.target, o.columns, o.log_target);
  for (const auto& w : all.meta.warnings) err << "warning: " << w << '\n';

  const LossKind loss_kind = loss_kind_from_string(o.loss);
  const LossSpec loss = loss_kind == LossKind::check ? LossSpec::check(o.tau) : LossSpec{loss_kind, 0.5};
  KernelSpec kernel = o.kernel == "gaussian" ? KernelSpec::gaussian(o.bandwidth)
                      : o.kernel == "spline" ? KernelSpec::spline(o.spline_order)
                                             : throw ArgumentError("unknown kernel: " + o.kernel);
  if (kernel.kind == KernelKind::spline) require(all.X.cols() == 1, "spline kernel requires one feature column");
  const Sampling sampling = sampling_from_string(o.sampling);
  require(o.features >= 1, "--features must be >= 1");
  require(o.lambda_grid || o.lambda > 0, "pass --lambda <value> or --lambda-grid");
  require(!o.exact || loss_kind == LossKind::check, "--exact supports the check loss only");

  SolverConfig cfg;
  cfg.max_iters = o.max_iters;
  cfg.tol_primal = o.tol;
  cfg.tol_dual = o.tol;

  Dataset train = all;
  double lambda = o.lambda;
  auto map_for = [&](const Dataset& d, double lam) {
    if (sampling == Sampling::leverage) {
      return sample_leverage_features(kernel, o.features, d.X, lam, derive_seed(o.seed, streams::kResample));
    }
    return sample_uniform_features(kernel, o.features, derive_seed(o.seed, streams::kFeaturePool), d.X.cols());
  };

  if (o.lambda_grid) {
    require(o.val_fraction > 0 && o.val_fraction < 1, "--val-fraction must lie in (0, 1)");
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(all.size()));
    std::iota(perm.begin(), perm.end(), 0);
    Philox rng(derive_seed(o.seed, streams::kSplit));
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    const auto n_val = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(o.val_fraction * all.size()));
    require(n_val < all.size(), "not enough rows for a validation split");
    Dataset shuffled = all;
    for (Eigen::Index i = 0; i < all.size(); ++i) {
      shuffled.X.row(i) = all.X.row(perm[static_cast<std::size_t>(i)]);
      shuffled.y[i] = all.y[perm[static_cast<std::size_t>(i)]];
    }
    const Dataset val = shuffled.slice(0, n_val);
    train = shuffled.slice(n_val, all.size() - n_val);
    require(loss_kind == LossKind::check, "--lambda-grid selects by validation PQE (check loss only)");
    GridSearchResult gs;
    if (o.exact) {
      gs.lambda_star = lambda_grid().back();
      double best = std::numeric_limits<double>::infinity();
      const Matrix K = gram_matrix(train.X, train.X, kernel);
      const Matrix K_val = gram_matrix(val.X, train.X, kernel);
      auto grid = lambda_grid();
      for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
        const Model m = fit_exact_kqr(K, train.y, o.tau, *it, cfg);
        const double score = pqe(K_val * m.coefficients, val.y, o.tau);
        if (score < best) {
          best = score;
          gs.lambda_star = *it;
        }
      }
    } else {
      gs = grid_search_lambda(train, val, o.tau, [&](double lam) { return map_for(train, lam); }, cfg);
    }
    lambda = gs.lambda_star;
    err << "selected lambda " << lambda << '\n';
  }

  Model model;
  if (o.exact) {
    model = fit_exact_kqr(kernel, train.X, train.y, o.tau, lambda, cfg);
  } else {
    model = fit_random_features(std::make_shared<const FeatureMap>(map_for(train, lambda)), train.X,
                                train.y, loss, lambda, cfg);
  }
  if (!model.diagnostics.converged) {
    err << "warning: solver stopped at max_iters (" << model.diagnostics.iterations << ")\n";
  }
  json j = model_to_json(model);
  j["normalization"] = normalization_to_json(*all.meta.normalization);
  j["target"] = {{"column", o.target}, {"log_transformed", o.log_target}};
  j["training_rows"] = train.size();
  j["dropped_rows"] = all.meta.dropped_rows;
  write_text(o.out, j.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_predict(const PredictOptions& o, std::ostream& out) {
  json j;
  try {
    j = json::parse(read_text(o.model));
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("model JSON: ") + e.what());
  }
  const Model model = model_from_json(j);
  require(j.contains("normalization"), "model JSON: missing normalization (was it written by `fit`?)");
  const Matrix X = load_csv_features(o.data, normalization_from_json(j.at("normalization")));
  const Vector pred = predict(model, X);
  std::ostringstream csv;
  csv << "prediction\n";
  char buf[40];
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", pred[i]);
    csv << buf << '\n';
  }
  write_text(o.out, csv.str(), out);
  return kExitOk;
}

int cmd_experiment(const ExperimentOptions& o, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec = experiment_spec_from_json(read_text(o.spec));
  if (o.seed_given) spec.base_seed = o.seed;
  std::size_t done = 0;
  const std::size_t total = spec.n_train.size() * static_cast<std::size_t>(spec.repetitions);
  const auto records = run_experiment(spec, [&](const ExperimentRecord& r) {
    ++done;
    err << "[" << done << "/" << total << "] n=" << r.n << " rep=" << r.repetition
        << (r.failed ? " FAILED: " + r.error : " pqe=" + std::to_string(r.pqe)) << '\n';
  });
  std::ostringstream csv;
  write_records_csv(csv, records);
  write_text(o.out, csv.str(), out);
  if (!o.out.empty() && o.out != "-") {
    json sidecar = {{"library", "qfeat"},
                    {"version", kVersion},
                    {"records", records.size()},
                    {"failed", std::count_if(records.begin(), records.end(),
                                             [](const ExperimentRecord& r) { return r.failed; })},
                    {"spec", json::parse(experiment_spec_to_json(spec))}};
    write_text(o.out + ".json", sidecar.dump(2) + "\n", out);
  }
  return kExitOk;
}

int cmd_rates(const RatesOptions& o, std::ostream& out) {
  const RegularitySpec spec{o.r, o.gamma, o.alpha};
  const RateSchedule s = rate_schedule(spec, o.n, o.C_M);
  write_text(o.out, schedule_to_json(spec, o.n, o.C_M, s).dump(2) + "\n", out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel quantile regression with random features"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model from a CSV file and write model JSON");
  fit_cmd->add_option("--data", fit.data, "Training CSV (with header)")->required();
  fit_cmd->add_option("--target", fit.target, "Target column")->required();
  fit_cmd->add_option("--columns", fit.columns, "Feature columns (default: all but target)")->delimiter(',');
  fit_cmd->add_flag("--log-target", fit.log_target, "Log-transform the target");
  fit_cmd->add_option("--tau", fit.tau, "Quantile level");
  fit_cmd->add_option("--loss", fit.loss, "check | hinge | logistic");
  auto* lambda_opt = fit_cmd->add_option("--lambda", fit.lambda, "Ridge penalty");
  auto* grid_opt = fit_cmd->add_flag("--lambda-grid", fit.lambda_grid, "Select lambda on a validation split");
  lambda_opt->excludes(grid_opt);
  fit_cmd->add_option("--val-fraction", fit.val_fraction, "Validation fraction for --lambda-grid");
  fit_cmd->add_option("--features", fit.features, "Number of random features M");
  fit_cmd->add_option("--sampling", fit.sampling, "uniform | leverage");
  fit_cmd->add_option("--kernel", fit.kernel, "gaussian | spline");
  fit_cmd->add_option("--bandwidth", fit.bandwidth, "Gaussian bandwidth");
  fit_cmd->add_option("--spline-order", fit.spline_order, "Spline kernel order q");
  fit_cmd->add_flag("--exact", fit.exact, "Exact kernel quantile regression instead of random features");
  fit_cmd->add_option("--seed", fit.seed, "Random seed");
  fit_cmd->add_option("--max-iters", fit.max_iters, "ADMM iteration cap");
  fit_cmd->add_option("--tol", fit.tol, "ADMM residual tolerance");
  fit_cmd->add_option("--out", fit.out, "Model JSON path (default stdout)");

  PredictOptions pred;
  auto* pred_cmd = app.add_subcommand("predict", "Predict with a model JSON on a CSV file");
  pred_cmd->add_option("--model", pred.model, "Model JSON")->required();
  pred_cmd->add_option("--data", pred.data, "Input CSV")->required();
  pred_cmd->add_option("--out", pred.out, "Predictions CSV (default stdout)");

  ExperimentOptions exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run an experiment spec and write records CSV");
  exp_cmd->add_option("--spec", exp.spec, "Experiment spec JSON")->required();
  exp_cmd->add_option("--out", exp.out, "Records CSV (default stdout); sidecar at <out>.json");
  auto* seed_opt = exp_cmd->add_option("--seed", exp.seed, "Override base_seed");

  RatesOptions rates;
  auto* rates_cmd = app.add_subcommand("rates", "Print the (lambda, M) schedule as JSON");
  rates_cmd->add_option("--r", rates.r, "Source exponent r")->required();
  rates_cmd->add_option("--gamma", rates.gamma, "Capacity exponent gamma")->required();
  rates_cmd->add_option("--alpha", rates.alpha, "Compatibility exponent (1 uniform, gamma leverage)");
  rates_cmd->add_option("--n", rates.n, "Sample size")->required();
  rates_cmd->add_option("--cm", rates.C_M, "Constant in front of the feature schedule");
  rates_cmd->add_option("--out", rates.out, "Output path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitArgument;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out, err);
    if (*pred_cmd) return cmd_predict(pred, out);
    if (*exp_cmd) {
      exp.seed_given = seed_opt->count() > 0;
      return cmd_experiment(exp, out, err);
    }
    if (*rates_cmd) return cmd_rates(rates, out);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitArgument;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitArgument;
}

}  // namespace qfeat

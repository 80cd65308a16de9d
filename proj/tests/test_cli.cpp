#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qfeat/cli.hpp"
#include "qfeat/rng.hpp"

using namespace qfeat;
namespace fs = std::filesystem;

namespace {
fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "qfeat_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string make_csv(const std::string& name, int rows, bool one_dim) {
  const auto path = scratch() / name;
  std::ofstream out(path);
  Philox g(1);
  out << (one_dim ? "x,y\n" : "a,b,y\n");
  for (int i = 0; i < rows; ++i) {
    const double a = g.uniform(), b = g.uniform();
    if (one_dim) {
      out << a << "," << a * a + 0.05 * g.normal() << "\n";
    } else {
      out << a << "," << b << "," << a - b + 0.1 * g.normal() << "\n";
    }
  }
  return path.string();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}
}  // namespace

TEST_CASE("fit then predict") {
  const auto data = make_csv("train.csv", 120, false);
  const auto model = (scratch() / "model.json").string();
  const auto preds = (scratch() / "preds.csv").string();
  auto r = run({"fit", "--data", data, "--target", "y", "--tau", "0.5", "--features", "16", "--lambda", "0.001",
                "--seed", "3", "--out", model});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(slurp(model));
  CHECK(j.at("format") == "qfeat-model");
  CHECK(j.at("training_rows") == 120);

  r = run({"predict", "--model", model, "--data", data, "--out", preds});
  REQUIRE(r.code == kExitOk);
  std::istringstream lines(slurp(preds));
  std::string line;
  std::getline(lines, line);
  CHECK(line == "prediction");
  int count = 0;
  while (std::getline(lines, line)) {
    CHECK(std::isfinite(std::stod(line)));
    ++count;
  }
  CHECK(count == 120);

  // Same seed, same model.
  const auto model2 = (scratch() / "model2.json").string();
  run({"fit", "--data", data, "--target", "y", "--features", "16", "--lambda", "0.001", "--seed", "3", "--out", model2});
  CHECK(slurp(model) == slurp(model2));
}

TEST_CASE("fit variants") {
  const auto data = make_csv("one.csv", 150, true);
  CHECK(run({"fit", "--data", data, "--target", "y", "--kernel", "spline", "--features", "8", "--lambda-grid"}).code ==
        kExitOk);
  CHECK(run({"fit", "--data", data, "--target", "y", "--sampling", "leverage", "--features", "8", "--lambda",
             "0.01"}).code == kExitOk);
  CHECK(run({"fit", "--data", data, "--target", "y", "--exact", "--lambda", "0.01"}).code == kExitOk);
  const auto r = run({"fit", "--data", data, "--target", "y", "--tau", "0.9", "--lambda", "0.01"});
  CHECK(r.code == kExitOk);
  CHECK(nlohmann::json::parse(r.out).at("loss").at("tau") == 0.9);
}

TEST_CASE("argument errors exit with 2") {
  const auto data = make_csv("args.csv", 40, false);
  CHECK(run({}).code == kExitArgument);
  CHECK(run({"nonsense"}).code == kExitArgument);
  CHECK(run({"fit", "--data", data}).code == kExitArgument);
  CHECK(run({"fit", "--data", data, "--target", "nope"}).code == kExitArgument);
  CHECK(run({"fit", "--data", data, "--target", "y", "--lambda", "0.1", "--lambda-grid"}).code == kExitArgument);
  CHECK(run({"fit", "--data", data, "--target", "y", "--tau", "1.5"}).code == kExitArgument);
  CHECK(run({"fit", "--data", data, "--target", "y", "--sampling", "magic"}).code == kExitArgument);
  CHECK(run({"fit", "--data", data, "--target", "y", "--kernel", "spline"}).code == kExitArgument);
  CHECK(run({"fit", "--data", data, "--target", "y", "--features", "0"}).code == kExitArgument);
  CHECK(run({"predict", "--model", "/nonexistent.json", "--data", data}).code == kExitArgument);
  CHECK(run({"experiment", "--spec", "/nonexistent.json"}).code == kExitArgument);
  CHECK(run({"rates", "--r", "0.2", "--gamma", "0.3", "--n", "100"}).code == kExitArgument);
  const auto r = run({"fit", "--data", "/nonexistent.csv", "--target", "y"});
  CHECK(r.code == kExitArgument);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("numeric failures exit with 3") {
  const auto data = make_csv("numeric.csv", 300, true);
  // Scoring system Phi^T Phi + lambda n I is singular for rank-deficient spline features.
  const auto r = run({"fit", "--data", data, "--target", "y", "--kernel", "spline", "--spline-order", "20",
                      "--features", "20", "--sampling", "leverage", "--lambda", "1e-300"});
  CHECK(r.code == kExitNumeric);
  CHECK(r.err.find("numeric") != std::string::npos);
}

TEST_CASE("rates subcommand") {
  const auto r = run({"rates", "--r", "0.5", "--gamma", "1", "--alpha", "1", "--n", "10000"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("lambda").get<double>() == doctest::Approx(0.01));
  CHECK(j.at("M_min") == 100);
  CHECK(j.at("predicted_rate_exponent").get<double>() == doctest::Approx(-0.5));
}

TEST_CASE("experiment subcommand writes records and a sidecar") {
  const auto spec = (scratch() / "spec.json").string();
  std::ofstream(spec) << R"({"generator": {"kind": "homoscedastic"}, "n_train": [50], "n_val": 30,
    "n_test": 100, "features": {"rule": "fixed", "M": 5}, "lambda": {"rule": "fixed", "value": 0.01},
    "repetitions": 2, "base_seed": 4})";
  const auto out = (scratch() / "records.csv").string();
  auto r = run({"experiment", "--spec", spec, "--out", out});
  REQUIRE(r.code == kExitOk);
  const std::string text = slurp(out);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  const auto side = nlohmann::json::parse(slurp(out + ".json"));
  CHECK(side.at("records") == 2);
  CHECK(side.at("spec").at("base_seed") == 4);

  r = run({"experiment", "--spec", spec, "--seed", "5"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out != text);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <boost/math/special_functions/zeta.hpp>

#include "qfeat/dataset.hpp"
#include "qfeat/error.hpp"

using namespace qfeat;
using doctest::Approx;

namespace {
std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("qfeat_test_" + name);
  std::ofstream(path) << body;
  return path.string();
}

Eigen::RowVectorXd row(std::initializer_list<double> v) {
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r[i++] = x;
  return r;
}

double empirical_quantile(Vector v, double p) {
  std::sort(v.data(), v.data() + v.size());
  return v[static_cast<Eigen::Index>(p * static_cast<double>(v.size() - 1))];
}
}  // namespace

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.9) == Approx(1.2815515655446004).epsilon(1e-14));
  CHECK(normal_quantile(0.1) == Approx(-1.2815515655446004).epsilon(1e-14));
  CHECK_THROWS_AS(normal_quantile(1.0), ArgumentError);
}

TEST_CASE("spline generator") {
  const auto d = gen_spline_data(0.8, 0.2, 100000, 1);
  CHECK(d.size() == 100000);
  CHECK(d.has_truth());
  CHECK(d.X.minCoeff() >= 0.0);
  CHECK(d.X.maxCoeff() < 1.0);
  // Target order r / gamma + 1/2 = 4.5.
  CHECK(d.truth(row({0.0}), 0.5) == Approx(1 + 2 * boost::math::zeta(4.5)).epsilon(1e-8));
  CHECK(d.truth(row({0.0}), 0.5) == Approx(3.1094).epsilon(1e-4));
  CHECK(d.truth(row({0.3}), 0.9) - d.truth(row({0.3}), 0.5) == Approx(0.1 * 1.2815515655446004).epsilon(1e-12));
  const Vector noise = d.y - d.truth_values(0.5);
  const double var = (noise.array() - noise.mean()).square().mean();
  CHECK(var == Approx(0.01).epsilon(0.05));
  const auto again = gen_spline_data(0.8, 0.2, 100, 1);
  CHECK(again.y == d.y.head(100));
  CHECK_THROWS_AS(gen_spline_data(0.5, 0.1, 0, 1), ArgumentError);
}

TEST_CASE("spline generator at gamma zero is constant") {
  const auto d = gen_spline_data(1.0, 0.0, 10, 2);
  CHECK(d.truth(row({0.37}), 0.5) == Approx(1.0));
  CHECK_FALSE(d.meta.warnings.empty());
}

TEST_CASE("homoscedastic generator") {
  CHECK(homoscedastic_mean(row({0, 0, 0})) == Approx(1.0));
  CHECK(homoscedastic_mean(row({1, 1, 1})) == Approx(1.0));
  const auto d = gen_homoscedastic(100000, 3, 3);
  CHECK(d.truth(row({0, 0, 0}), 0.5) == Approx(1.0));
  CHECK(d.truth(row({0, 0, 0}), 0.9) == Approx(1.0 + 1.2815515655446004));
  Vector residual(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) residual[i] = d.y[i] - homoscedastic_mean(d.X.row(i));
  CHECK(std::abs(empirical_quantile(residual, 0.9) - 1.2815515655446004) < 0.02);
  CHECK(gen_homoscedastic(5, 6, 1).X.cols() == 6);
  CHECK_THROWS_AS(gen_homoscedastic(10, 2, 1), ArgumentError);
}

TEST_CASE("heteroscedastic generator") {
  for (double tau : {0.1, 0.5, 0.75}) {
    const auto d = gen_heteroscedastic(100000, tau, 4);
    const Vector truth = d.truth_values(tau);
    const double below = (d.y.array() <= truth.array()).cast<double>().mean();
    CHECK(std::abs(below - tau) < 0.01);
    CHECK(d.truth(row({0.5, 0.5, 0.5}), tau) == Approx(0.0).scale(1.0).epsilon(1e-12));
    // Quantiles at another level shift by the local scale (1 + mean x).
    const double scale = d.truth(row({0.2, 0.4, 0.9}), 0.9) - d.truth(row({0.2, 0.4, 0.9}), 0.5);
    CHECK(scale / 1.2815515655446004 == Approx(1.0 + 0.5).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gen_heteroscedastic(10, 1.0, 1), ArgumentError);
}

TEST_CASE("slice keeps truth and meta") {
  const auto d = gen_homoscedastic(20, 3, 5);
  const auto s = d.slice(5, 10);
  CHECK(s.size() == 10);
  CHECK(s.X == d.X.middleRows(5, 10));
  CHECK(s.has_truth());
  CHECK(s.meta.generator == d.meta.generator);
  CHECK_THROWS_AS(d.slice(15, 10), ArgumentError);
}

TEST_CASE("csv min-max normalization") {
  const auto path = write_temp("basic.csv", "a,b,price\n2,10,1.5\n4,10,2.5\n6,10,3.5\n");
  const auto d = load_csv_dataset(path, "price");
  REQUIRE(d.size() == 3);
  REQUIRE(d.X.cols() == 2);
  CHECK(d.X(0, 0) == 0.0);
  CHECK(d.X(1, 0) == 0.5);
  CHECK(d.X(2, 0) == 1.0);
  CHECK(d.X.col(1).isZero());
  CHECK_FALSE(d.meta.warnings.empty());
  CHECK(d.y[2] == 3.5);
  CHECK_FALSE(d.has_truth());
  CHECK_THROWS_AS(d.truth_values(0.5), ArgumentError);

  const auto logged = load_csv_dataset(path, "price", {"a"}, true);
  CHECK(logged.X.cols() == 1);
  CHECK(logged.y[0] == Approx(std::log(1.5)));

  const Matrix again = load_csv_features(path, *d.meta.normalization);
  CHECK(again == d.X);
}

TEST_CASE("csv rows with bad cells are dropped and counted") {
  const auto path = write_temp("dirty.csv", "x,y\n1,2\n,3\nabc,4\n3,5\n5,\n7,8\n");
  const auto d = load_csv_dataset(path, "y");
  CHECK(d.size() == 3);
  CHECK(d.meta.dropped_rows == 3);
  CHECK(d.X.minCoeff() >= 0.0);
  CHECK(d.X.maxCoeff() <= 1.0);
  Normalization norm = *d.meta.normalization;
  CHECK_THROWS_AS(load_csv_features(path, norm), ArgumentError);
}

TEST_CASE("csv errors") {
  const auto path = write_temp("small.csv", "x,y\n1,2\n");
  CHECK_THROWS_AS(load_csv_dataset(path, "y"), ArgumentError);
  const auto ok = write_temp("ok.csv", "x,y\n1,2\n2,3\n");
  CHECK_THROWS_AS(load_csv_dataset(ok, "missing"), ArgumentError);
  CHECK_THROWS_AS(load_csv_dataset(ok, "y", {"nope"}), ArgumentError);
  CHECK_THROWS_AS(load_csv_dataset("/nonexistent/file.csv", "y"), ArgumentError);
}

TEST_CASE("normalization of new data can leave the unit interval") {
  Normalization norm;
  norm.columns = {"a", "b"};
  norm.mins = Vector::Zero(2);
  norm.maxs = Vector::Constant(2, 2.0);
  Matrix raw(1, 2);
  raw << 1.0, 4.0;
  const Matrix out = norm.apply(raw);
  CHECK(out(0, 0) == 0.5);
  CHECK(out(0, 1) == 2.0);
}

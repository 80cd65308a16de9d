// Serial reference vs OpenMP kernels. Thread count follows QFEAT_THREADS.
#include <benchmark/benchmark.h>

#include "qfeat/features.hpp"
#include "qfeat/kernel.hpp"
#include "qfeat/rng.hpp"
#include "qfeat/serial_reference.hpp"
#include "qfeat/solver.hpp"

namespace {

qfeat::Matrix uniform_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  qfeat::Philox rng(seed);
  qfeat::Matrix X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = rng.uniform();
  return X;
}

void BM_GramGaussianSerial(benchmark::State& state) {
  const auto X = uniform_points(state.range(0), 3, 1);
  const auto spec = qfeat::KernelSpec::gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(qfeat::serial::gram_matrix(X, X, spec));
}

void BM_GramGaussianParallel(benchmark::State& state) {
  const auto X = uniform_points(state.range(0), 3, 1);
  const auto spec = qfeat::KernelSpec::gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(qfeat::gram_matrix(X, X, spec));
}

void BM_GramSplineSerial(benchmark::State& state) {
  const auto X = uniform_points(state.range(0), 1, 2);
  const auto spec = qfeat::KernelSpec::spline(4.0);
  for (auto _ : state) benchmark::DoNotOptimize(qfeat::serial::gram_matrix(X, X, spec));
}

void BM_GramSplineParallel(benchmark::State& state) {
  const auto X = uniform_points(state.range(0), 1, 2);
  const auto spec = qfeat::KernelSpec::spline(4.0);
  for (auto _ : state) benchmark::DoNotOptimize(qfeat::gram_matrix(X, X, spec));
}

void BM_FeaturesRffSerial(benchmark::State& state) {
  const auto X = uniform_points(state.range(0), 3, 3);
  const auto map = qfeat::sample_uniform_features(qfeat::KernelSpec::gaussian(), 100, 7, 3);
  for (auto _ : state) benchmark::DoNotOptimize(qfeat::serial::feature_matrix(map, X));
}

void BM_FeaturesRffParallel(benchmark::State& state) {
  const auto X = uniform_points(state.range(0), 3, 3);
  const auto map = qfeat::sample_uniform_features(qfeat::KernelSpec::gaussian(), 100, 7, 3);
  for (auto _ : state) benchmark::DoNotOptimize(qfeat::feature_matrix(map, X));
}

void BM_FeaturesSplineSerial(benchmark::State& state) {
  const auto X = uniform_points(state.range(0), 1, 4);
  const auto map = qfeat::sample_uniform_features(qfeat::KernelSpec::spline(10.0), 100, 7);
  for (auto _ : state) benchmark::DoNotOptimize(qfeat::serial::feature_matrix(map, X));
}

void BM_FeaturesSplineParallel(benchmark::State& state) {
  const auto X = uniform_points(state.range(0), 1, 4);
  const auto map = qfeat::sample_uniform_features(qfeat::KernelSpec::spline(10.0), 100, 7);
  for (auto _ : state) benchmark::DoNotOptimize(qfeat::feature_matrix(map, X));
}

void BM_AdmmCheckLoss(benchmark::State& state) {
  const auto X = uniform_points(state.range(0), 3, 5);
  const auto map = qfeat::sample_uniform_features(qfeat::KernelSpec::gaussian(), 50, 9, 3);
  const qfeat::Matrix Phi = qfeat::feature_matrix(map, X);
  qfeat::Vector y = X.rowwise().sum();
  qfeat::SolverConfig cfg;
  cfg.tol_primal = cfg.tol_dual = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qfeat::fit_admm(Phi, y, qfeat::LossSpec::check(0.5), 1e-4, cfg));
  }
}

}  // namespace

BENCHMARK(BM_GramGaussianSerial)->Arg(500)->Arg(2000);
BENCHMARK(BM_GramGaussianParallel)->Arg(500)->Arg(2000);
BENCHMARK(BM_GramSplineSerial)->Arg(500);
BENCHMARK(BM_GramSplineParallel)->Arg(500);
BENCHMARK(BM_FeaturesRffSerial)->Arg(1000)->Arg(10000);
BENCHMARK(BM_FeaturesRffParallel)->Arg(1000)->Arg(10000);
BENCHMARK(BM_FeaturesSplineSerial)->Arg(1000);
BENCHMARK(BM_FeaturesSplineParallel)->Arg(1000);
BENCHMARK(BM_AdmmCheckLoss)->Arg(1000);

BENCHMARK_MAIN();

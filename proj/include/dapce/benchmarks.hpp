#pragma once

// Analytical test problems with their input distributions, published reference
// statistics and recommended training settings.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dapce/model.hpp"
#include "dapce/stochastic.hpp"
#include "dapce/uq.hpp"

namespace dapce {

/// Contact angle (rad): arccos((x1 + 0.5 (x2 + x3)) / (x4 - 0.5 (x2 + x3))).
/// Throws DomainError when the arccos argument leaves [-1, 1].
double fortini_clutch(std::span<const double> x);

/// Displacement limit state (mm) for x = (q, F1, F2, E, I, L, dlim). Throws DomainError when E*I <= 0.
double cantilever_beam(std::span<const double> x);

/// n + 3 sigma sqrt(n) - sum x_i with n = x.size().
double rackwitz(std::span<const double> x, double sigma = 0.2);

/// Frozen smooth response over two bimodal and two normal inputs:
/// 4.5 + 0.6 x1 - 0.35 x2^2 + 0.25 x1 x2 + 0.8 (x3 - 1) + 0.3 sin(1.5 x1 + x4) x3.
double synthetic_multimodal(std::span<const double> x);

struct ReferenceStats {
  Moments moments;
  std::optional<double> p_fail;
  /// Number of decimals the reference values were published with (0 when exact).
  int decimals = 0;
  std::string source;
};

struct Benchmark {
  std::string name;
  std::string description;
  RandomVector inputs;
  std::function<double(std::span<const double>)> response;
  std::optional<double> threshold;
  Direction direction = Direction::Below;
  std::optional<ReferenceStats> reference;

  // Recommended surrogate settings.
  int order = 2;
  std::vector<int> hidden;
  Activation activation = Activation::Relu;
  TrainingConfig training;
  Index n_labeled = 40;
  Index n_unlabeled = 100000;
};

struct BenchmarkOptions {
  int rackwitz_n = 40;
};

std::vector<std::string> benchmark_names();

/// Throws Config listing the available names when `name` is unknown.
Benchmark get_benchmark(const std::string& name, const BenchmarkOptions& options = {});

struct BenchmarkData {
  Matrix x;
  Vector y;
  std::size_t excluded = 0;  // rows dropped because the response raised DomainError
};

/// Evaluates the response row-wise in fixed blocks.
BenchmarkData evaluate_benchmark(const Benchmark& bench, const Matrix& x, int threads = 1);

struct RunOptions {
  std::uint64_t seed = 1;
  int threads = 1;
  Index n_reference = 1000000;  // MCS rows for the reference statistics
  Index n_test = 10000;         // held-out rows for R^2 and e
  Index n_residual = 100000;    // fresh rows for the property residuals
  bool classical = true;        // also fit a classical aPC on the labeled set
  EpochObserver observer;
};

struct StatsRow {
  Moments moments;
  std::optional<double> p_fail;
};

struct BenchmarkRun {
  StatsRow reference;  // own MCS on the true response
  StatsRow deep;       // MCS on the trained surrogate
  std::optional<StatsRow> classical;
  AccuracyReport deep_accuracy;
  std::optional<AccuracyReport> classical_accuracy;
  PropertyResiduals residuals;
  TrainingResult training;
  DeepAPCEModel model;
  std::size_t excluded = 0;  // reference rows dropped by DomainError
  double train_seconds = 0.0;
};

/// Full reproduction: LHS unlabeled pool and labeled set, training with the
/// benchmark's settings, reference MCS, held-out accuracy and residuals. All
/// sample streams derive from options.seed.
BenchmarkRun run_benchmark(const Benchmark& bench, const RunOptions& options = {});

/// |a / b - 1|.
double relative_error(double a, double b);

}  // namespace dapce

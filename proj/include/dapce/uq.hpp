#pragma once

// Output statistics: moments, failure probability, kernel density, accuracy
// metrics and k-fold cross-validation.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dapce {

struct Moments {
  double mean = 0.0;
  double std = 0.0;       // n-1 divisor
  double skewness = 0.0;  // 1/n sum of standardized cubes
  double kurtosis = 0.0;  // raw, normal -> 3
};

/// Sorts a copy and accumulates with compensated sums, so the result is
/// independent of the sample order. Zero variance -> UndefinedStatistic.
Moments four_moments(std::span<const double> samples);

enum class Direction { Below, Above };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& name);

/// Fraction of samples strictly below (or strictly above) `threshold`.
double failure_probability(std::span<const double> samples, double threshold, Direction direction);

struct KdeCurve {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Silverman's rule h = 0.9 min(sigma, IQR/1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian KDE on `points` uniform grid points spanning [min - 3h, max + 3h].
KdeCurve kde_pdf(std::span<const double> samples, int points = 512);

/// Trapezoidal integral of the curve.
double integrate(const KdeCurve& curve);

struct AccuracyReport {
  double r2 = 0.0;
  double e = 0.0;
  double mae = 0.0;
  std::vector<double> abs_errors;
};

/// R^2 = 1 - eps/D with eps = mean squared error (1/N) and D the 1/(N-1) variance
/// of the truth; e = sqrt(sum (y - yhat)^2 / sum y^2).
AccuracyReport accuracy(std::span<const double> truth, std::span<const double> predicted);

struct UQReport {
  Moments moments;
  std::optional<double> p_fail;
  std::optional<double> threshold;
  Direction direction = Direction::Below;
  std::size_t n = 0;
  std::optional<KdeCurve> kde;
};

UQReport make_report(std::span<const double> samples, std::optional<double> threshold = std::nullopt,
                     Direction direction = Direction::Below, int kde_points = 0);

/// JSON object with fields mean, std, skewness, kurtosis, n and, when present,
/// p_fail, threshold, direction, r2, e, mae.
std::string to_json(const UQReport& report, const AccuracyReport* accuracy = nullptr);

/// Two-column CSV "x,density".
void write_kde_csv(std::ostream& out, const KdeCurve& curve);

/// Shortest round-trip decimal form of `v`, independent of the C locale.
std::string format_double(double v);

/// Random partition of 0..n-1 into k folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> k_fold_partition(std::size_t n, int k, std::uint64_t seed);

/// Trains on (x, y) of the other folds and returns predictions for `x_eval`.
using FoldFitter = std::function<Eigen::VectorXd(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                                                 const Eigen::MatrixXd& x_eval, int fold)>;

struct CrossValidationResult {
  std::vector<std::vector<std::size_t>> folds;
  std::vector<double> fold_mae;
  double mean_mae = 0.0;
};

CrossValidationResult k_fold_cv(const FoldFitter& fit, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k,
                                std::uint64_t seed);

}  // namespace dapce

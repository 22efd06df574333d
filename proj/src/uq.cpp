#include "dapce/uq.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "dapce/errors.hpp"
#include "dapce/numerics.hpp"
#include "dapce/random.hpp"

namespace dapce {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      fail(ErrorKind::NonFiniteInput, std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

Moments four_moments(std::span<const double> samples) {
  require(samples.size() >= 2, ErrorKind::InvalidInput, "four moments need at least 2 samples");
  require_finite(samples, "four_moments");
  const std::vector<double> s = sorted_copy(samples);
  const std::size_t n = s.size();
  const double nd = static_cast<double>(n);
  Moments m;
  m.mean = blocked_sum(s) / nd;
  const double ss = blocked_sum(n, [&](std::size_t i) {
    const double d = s[i] - m.mean;
    return d * d;
  });
  m.std = std::sqrt(ss / (nd - 1.0));
  if (!(m.std > 0.0)) {
    fail(ErrorKind::UndefinedStatistic, "skewness and kurtosis are undefined for zero-variance samples");
  }
  m.skewness = blocked_sum(n, [&](std::size_t i) {
                 const double z = (s[i] - m.mean) / m.std;
                 return z * z * z;
               }) / nd;
  m.kurtosis = blocked_sum(n, [&](std::size_t i) {
                 const double z = (s[i] - m.mean) / m.std;
                 return z * z * z * z;
               }) / nd;
  return m;
}

std::string to_string(Direction d) { return d == Direction::Below ? "below" : "above"; }

Direction direction_from_string(const std::string& name) {
  if (name == "below") return Direction::Below;
  if (name == "above") return Direction::Above;
  fail(ErrorKind::Config, "unknown failure direction '" + name + "' (expected below or above)");
}

double failure_probability(std::span<const double> samples, double threshold, Direction direction) {
  require(!samples.empty(), ErrorKind::InvalidInput, "failure probability needs at least one sample");
  std::size_t count = 0;
  for (double v : samples) {
    if (direction == Direction::Below ? v < threshold : v > threshold) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(samples.size());
}

double silverman_bandwidth(std::span<const double> samples) {
  require(samples.size() >= 2, ErrorKind::InvalidInput, "bandwidth needs at least 2 samples");
  const std::vector<double> s = sorted_copy(samples);
  const double nd = static_cast<double>(s.size());
  const double mean = blocked_sum(s) / nd;
  const double sigma = std::sqrt(blocked_sum(s.size(), [&](std::size_t i) {
                                   const double d = s[i] - mean;
                                   return d * d;
                                 }) /
                                 (nd - 1.0));
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  double spread = sigma;
  if (iqr > 0.0) spread = std::min(sigma, iqr / 1.34);
  return 0.9 * spread * std::pow(nd, -0.2);
}

KdeCurve kde_pdf(std::span<const double> samples, int points) {
  require(samples.size() >= 10, ErrorKind::InvalidInput, "KDE needs at least 10 samples");
  require(points >= 2, ErrorKind::InvalidInput, "KDE grid needs at least 2 points");
  require_finite(samples, "kde_pdf");
  const std::vector<double> s = sorted_copy(samples);
  if (!(s.back() > s.front())) {
    fail(ErrorKind::UndefinedStatistic, "KDE is undefined for zero-variance samples");
  }
  KdeCurve curve;
  curve.bandwidth = silverman_bandwidth(s);
  const double h = curve.bandwidth;
  const double lo = s.front() - 3.0 * h;
  const double hi = s.back() + 3.0 * h;
  const double step = (hi - lo) / static_cast<double>(points - 1);
  const double norm = 1.0 / (static_cast<double>(s.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  curve.x.resize(static_cast<std::size_t>(points));
  curve.density.resize(static_cast<std::size_t>(points));
  for (int g = 0; g < points; ++g) {
    const double x = lo + step * g;
    // Kernel contributions beyond 8h are below 1.3e-14 and are skipped.
    const auto first = std::lower_bound(s.begin(), s.end(), x - 8.0 * h);
    const auto last = std::upper_bound(first, s.end(), x + 8.0 * h);
    const auto offset = static_cast<std::size_t>(first - s.begin());
    const auto count = static_cast<std::size_t>(last - first);
    const double sum = blocked_sum(count, [&](std::size_t i) {
      const double z = (x - s[offset + i]) / h;
      return std::exp(-0.5 * z * z);
    });
    curve.x[static_cast<std::size_t>(g)] = x;
    curve.density[static_cast<std::size_t>(g)] = sum * norm;
  }
  return curve;
}

double integrate(const KdeCurve& curve) {
  double total = 0.0;
  for (std::size_t i = 1; i < curve.x.size(); ++i) {
    total += 0.5 * (curve.density[i] + curve.density[i - 1]) * (curve.x[i] - curve.x[i - 1]);
  }
  return total;
}

AccuracyReport accuracy(std::span<const double> truth, std::span<const double> predicted) {
  require(truth.size() == predicted.size(), ErrorKind::InvalidInput, "accuracy: length mismatch");
  require(truth.size() >= 2, ErrorKind::InvalidInput, "accuracy needs at least 2 points");
  require_finite(truth, "accuracy truth");
  require_finite(predicted, "accuracy prediction");
  const std::size_t n = truth.size();
  const double nd = static_cast<double>(n);
  const double mean = blocked_sum(truth) / nd;
  const double d = blocked_sum(n, [&](std::size_t i) {
                     const double t = truth[i] - mean;
                     return t * t;
                   }) /
                   (nd - 1.0);
  if (!(d > 0.0)) fail(ErrorKind::UndefinedStatistic, "R^2 is undefined for constant truth values");
  const double sse = blocked_sum(n, [&](std::size_t i) {
    const double r = truth[i] - predicted[i];
    return r * r;
  });
  const double sy2 = blocked_sum(n, [&](std::size_t i) { return truth[i] * truth[i]; });
  AccuracyReport rep;
  rep.r2 = 1.0 - (sse / nd) / d;
  rep.e = sy2 > 0.0 ? std::sqrt(sse / sy2) : 0.0;
  rep.abs_errors.resize(n);
  for (std::size_t i = 0; i < n; ++i) rep.abs_errors[i] = std::abs(truth[i] - predicted[i]);
  rep.mae = blocked_sum(rep.abs_errors) / nd;
  return rep;
}

UQReport make_report(std::span<const double> samples, std::optional<double> threshold, Direction direction,
                     int kde_points) {
  UQReport r;
  r.moments = four_moments(samples);
  r.n = samples.size();
  r.direction = direction;
  if (threshold) {
    r.threshold = threshold;
    r.p_fail = failure_probability(samples, *threshold, direction);
  }
  if (kde_points > 0) r.kde = kde_pdf(samples, kde_points);
  return r;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_json(const UQReport& report, const AccuracyReport* acc) {
  nlohmann::ordered_json j;
  j["mean"] = report.moments.mean;
  j["std"] = report.moments.std;
  j["skewness"] = report.moments.skewness;
  j["kurtosis"] = report.moments.kurtosis;
  j["n"] = report.n;
  if (report.p_fail) {
    j["p_fail"] = *report.p_fail;
    j["threshold"] = *report.threshold;
    j["direction"] = to_string(report.direction);
  }
  if (acc) {
    j["r2"] = acc->r2;
    j["e"] = acc->e;
    j["mae"] = acc->mae;
  }
  return j.dump(2);
}

void write_kde_csv(std::ostream& out, const KdeCurve& curve) {
  out << "x,density\n";
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    out << format_double(curve.x[i]) << ',' << format_double(curve.density[i]) << '\n';
  }
}

std::vector<std::vector<std::size_t>> k_fold_partition(std::size_t n, int k, std::uint64_t seed) {
  require(k >= 2, ErrorKind::InvalidInput, "cross-validation needs k >= 2");
  require(n >= static_cast<std::size_t>(k), ErrorKind::InvalidInput,
          "cross-validation needs at least k samples (every fold must hold one)");
  Rng rng(seed);
  const std::vector<std::size_t> order = rng.permutation(n);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(folds[f].begin(), folds[f].end());
    pos += size;
  }
  return folds;
}

CrossValidationResult k_fold_cv(const FoldFitter& fit, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k,
                                std::uint64_t seed) {
  require(x.rows() == y.size(), ErrorKind::InvalidInput, "cross-validation: input/output count mismatch");
  CrossValidationResult res;
  res.folds = k_fold_partition(static_cast<std::size_t>(x.rows()), k, seed);
  for (int f = 0; f < k; ++f) {
    const auto& held = res.folds[static_cast<std::size_t>(f)];
    std::vector<bool> is_held(static_cast<std::size_t>(x.rows()), false);
    for (std::size_t i : held) is_held[i] = true;
    const auto n_train = static_cast<Eigen::Index>(x.rows() - static_cast<Eigen::Index>(held.size()));
    Eigen::MatrixXd xt(n_train, x.cols());
    Eigen::VectorXd yt(n_train);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (is_held[static_cast<std::size_t>(i)]) continue;
      xt.row(r) = x.row(i);
      yt(r) = y(i);
      ++r;
    }
    Eigen::MatrixXd xe(static_cast<Eigen::Index>(held.size()), x.cols());
    for (std::size_t i = 0; i < held.size(); ++i) xe.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(held[i]));
    const Eigen::VectorXd pred = fit(xt, yt, xe, f);
    require(pred.size() == xe.rows(), ErrorKind::InvalidState, "fold predictor returned the wrong number of values");
    double err = 0.0;
    for (std::size_t i = 0; i < held.size(); ++i) {
      err += std::abs(pred(static_cast<Eigen::Index>(i)) - y(static_cast<Eigen::Index>(held[i])));
    }
    res.fold_mae.push_back(err / static_cast<double>(held.size()));
  }
  double total = 0.0;
  for (double m : res.fold_mae) total += m;
  res.mean_mae = total / static_cast<double>(k);
  return res;
}

}  // namespace dapce

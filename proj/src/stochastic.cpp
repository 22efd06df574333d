#include "dapce/stochastic.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

#include "dapce/errors.hpp"
#include "dapce/parallel.hpp"

namespace dapce {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_quantile(double u) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u); }

void check_positive(double v, const char* what) {
  require(std::isfinite(v) && v > 0.0, ErrorKind::InvalidInput, std::string(what) + " must be positive");
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::Normal: return "normal";
    case Family::Lognormal: return "lognormal";
    case Family::Gumbel: return "gumbel";
    case Family::GaussianMixture: return "gaussian_mixture";
    case Family::Deterministic: return "deterministic";
    case Family::Uniform: return "uniform";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "normal") return Family::Normal;
  if (name == "lognormal") return Family::Lognormal;
  if (name == "gumbel") return Family::Gumbel;
  if (name == "gaussian_mixture") return Family::GaussianMixture;
  if (name == "deterministic") return Family::Deterministic;
  if (name == "uniform") return Family::Uniform;
  fail(ErrorKind::Config, "unknown distribution family '" + name +
                              "' (expected normal, lognormal, gumbel, gaussian_mixture, deterministic or uniform)");
}

Marginal Marginal::normal(double mean, double std) {
  require(std::isfinite(mean), ErrorKind::InvalidInput, "normal mean must be finite");
  check_positive(std, "normal standard deviation");
  Marginal m;
  m.family_ = Family::Normal;
  m.a_ = mean;
  m.b_ = std;
  return m;
}

Marginal Marginal::lognormal(double mean, double std) {
  check_positive(mean, "lognormal mean");
  check_positive(std, "lognormal standard deviation");
  const double cov = std / mean;
  const double zeta2 = std::log1p(cov * cov);
  Marginal m;
  m.family_ = Family::Lognormal;
  m.a_ = std::log(mean) - 0.5 * zeta2;
  m.b_ = std::sqrt(zeta2);
  return m;
}

Marginal Marginal::gumbel(double mean, double std) {
  require(std::isfinite(mean), ErrorKind::InvalidInput, "Gumbel mean must be finite");
  check_positive(std, "Gumbel standard deviation");
  const double beta = std * std::sqrt(6.0) / std::numbers::pi;
  Marginal m;
  m.family_ = Family::Gumbel;
  m.a_ = mean - kEulerGamma * beta;
  m.b_ = beta;
  return m;
}

Marginal Marginal::from_cov(Family family, double mean, double cov) {
  require(cov >= 0.0 && std::isfinite(cov), ErrorKind::InvalidInput, "C.O.V. must be non-negative");
  if (family == Family::Deterministic || cov == 0.0) return deterministic(mean);
  const double sd = std::abs(mean) * cov;
  switch (family) {
    case Family::Normal: return normal(mean, sd);
    case Family::Lognormal: return lognormal(mean, sd);
    case Family::Gumbel: return gumbel(mean, sd);
    case Family::Uniform: {
      const double half = sd * std::sqrt(3.0);
      return uniform(mean - half, mean + half);
    }
    default: break;
  }
  fail(ErrorKind::InvalidInput, "family " + to_string(family) + " cannot be built from mean and C.O.V.");
}

Marginal Marginal::mixture(std::vector<MixtureComponent> components) {
  require(!components.empty(), ErrorKind::InvalidInput, "mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    require(c.weight > 0.0 && std::isfinite(c.weight), ErrorKind::InvalidInput, "mixture weights must be positive");
    require(std::isfinite(c.mean), ErrorKind::InvalidInput, "mixture component mean must be finite");
    check_positive(c.std, "mixture component standard deviation");
    total += c.weight;
  }
  require(std::abs(total - 1.0) < 1e-9, ErrorKind::InvalidInput, "mixture weights must sum to 1");
  Marginal m;
  m.family_ = Family::GaussianMixture;
  m.components_ = std::move(components);
  // Walker alias table.
  const std::size_t k = m.components_.size();
  m.alias_prob_.assign(k, 0.0);
  m.alias_index_.assign(k, 0);
  std::vector<double> scaled(k);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < k; ++i) {
    scaled[i] = m.components_[i].weight / total * static_cast<double>(k);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    m.alias_prob_[s] = scaled[s];
    m.alias_index_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) m.alias_prob_[i] = 1.0;
  for (std::size_t i : small) m.alias_prob_[i] = 1.0;
  double lo = m.components_[0].mean, hi = lo;
  for (const auto& c : m.components_) {
    lo = std::min(lo, c.mean - 40.0 * c.std);
    hi = std::max(hi, c.mean + 40.0 * c.std);
  }
  m.a_ = lo;
  m.b_ = hi;
  return m;
}

Marginal Marginal::deterministic(double value) {
  require(std::isfinite(value), ErrorKind::InvalidInput, "deterministic value must be finite");
  Marginal m;
  m.family_ = Family::Deterministic;
  m.a_ = value;
  m.b_ = value;
  return m;
}

Marginal Marginal::uniform(double lower, double upper) {
  require(std::isfinite(lower) && std::isfinite(upper) && lower < upper, ErrorKind::InvalidInput,
          "uniform bounds must satisfy lower < upper");
  Marginal m;
  m.family_ = Family::Uniform;
  m.a_ = lower;
  m.b_ = upper;
  return m;
}

double Marginal::mean() const {
  switch (family_) {
    case Family::Normal:
    case Family::Deterministic: return a_;
    case Family::Lognormal: return std::exp(a_ + 0.5 * b_ * b_);
    case Family::Gumbel: return a_ + kEulerGamma * b_;
    case Family::Uniform: return 0.5 * (a_ + b_);
    case Family::GaussianMixture: {
      double m = 0.0;
      for (const auto& c : components_) m += c.weight * c.mean;
      return m;
    }
  }
  return 0.0;
}

double Marginal::std() const {
  switch (family_) {
    case Family::Normal: return b_;
    case Family::Deterministic: return 0.0;
    case Family::Lognormal: return mean() * std::sqrt(std::expm1(b_ * b_));
    case Family::Gumbel: return b_ * std::numbers::pi / std::sqrt(6.0);
    case Family::Uniform: return (b_ - a_) / std::sqrt(12.0);
    case Family::GaussianMixture: {
      const double mu = mean();
      double second = 0.0;
      for (const auto& c : components_) second += c.weight * (c.std * c.std + (c.mean - mu) * (c.mean - mu));
      return std::sqrt(second);
    }
  }
  return 0.0;
}

double Marginal::cdf(double x) const {
  switch (family_) {
    case Family::Normal: return std_normal_cdf((x - a_) / b_);
    case Family::Lognormal: return x <= 0.0 ? 0.0 : std_normal_cdf((std::log(x) - a_) / b_);
    case Family::Gumbel: return std::exp(-std::exp(-(x - a_) / b_));
    case Family::Uniform: return x <= a_ ? 0.0 : (x >= b_ ? 1.0 : (x - a_) / (b_ - a_));
    case Family::Deterministic: return x >= a_ ? 1.0 : 0.0;
    case Family::GaussianMixture: {
      double p = 0.0;
      for (const auto& c : components_) p += c.weight * std_normal_cdf((x - c.mean) / c.std);
      return p;
    }
  }
  return 0.0;
}

double Marginal::inverse_cdf(double u) const {
  if (!(u > 0.0 && u < 1.0)) {
    fail(ErrorKind::DomainError, "inverse CDF needs a probability in (0, 1), got " + std::to_string(u));
  }
  switch (family_) {
    case Family::Normal: return a_ + b_ * std_normal_quantile(u);
    case Family::Lognormal: return std::exp(a_ + b_ * std_normal_quantile(u));
    case Family::Gumbel: return a_ - b_ * std::log(-std::log(u));
    case Family::Uniform: return a_ + u * (b_ - a_);
    case Family::Deterministic: return a_;
    case Family::GaussianMixture: {
      const auto f = [&](double x) { return cdf(x) - u; };
      double lo = a_;
      double hi = b_;
      if (f(lo) >= 0.0) return lo;
      if (f(hi) <= 0.0) return hi;
      std::uintmax_t iterations = 200;
      const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                        iterations);
      return 0.5 * (r.first + r.second);
    }
  }
  return a_;
}

double Marginal::draw(Rng& rng) const {
  if (family_ == Family::Deterministic) return a_;
  if (family_ != Family::GaussianMixture) return inverse_cdf(rng.uniform_open());
  const std::size_t slot = static_cast<std::size_t>(rng.below(components_.size()));
  const std::size_t pick = rng.uniform() < alias_prob_[slot] ? slot : alias_index_[slot];
  const auto& c = components_[pick];
  return c.mean + c.std * std_normal_quantile(rng.uniform_open());
}

Eigen::MatrixXd lhs_sample(const RandomVector& rv, Eigen::Index n, std::uint64_t seed) {
  require(n >= 1, ErrorKind::InvalidInput, "LHS needs at least one sample");
  require(rv.dim() >= 1, ErrorKind::InvalidInput, "random vector is empty");
  Eigen::MatrixXd out(n, rv.dim());
  const auto count = static_cast<std::size_t>(n);
  for (int k = 0; k < rv.dim(); ++k) {
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(k)));
    const std::vector<std::size_t> bins = rng.permutation(count);
    const Marginal& m = rv.marginals[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < count; ++i) {
      const double u = (static_cast<double>(bins[i]) + rng.uniform_open()) / static_cast<double>(n);
      out(static_cast<Eigen::Index>(i), k) = m.family() == Family::Deterministic ? m.mean() : m.inverse_cdf(u);
    }
  }
  return out;
}

Eigen::MatrixXd mcs_sample(const RandomVector& rv, Eigen::Index n, std::uint64_t seed, int threads) {
  require(n >= 1, ErrorKind::InvalidInput, "Monte Carlo sampling needs at least one sample");
  require(rv.dim() >= 1, ErrorKind::InvalidInput, "random vector is empty");
  Eigen::MatrixXd out(n, rv.dim());
  const auto blocks = static_cast<std::size_t>((n + kSampleBlock - 1) / kSampleBlock);
  parallel_blocks(blocks, threads, [&](std::size_t b) {
    Rng rng(stream_seed(seed, b));
    const Eigen::Index start = static_cast<Eigen::Index>(b) * kSampleBlock;
    const Eigen::Index stop = std::min(n, start + kSampleBlock);
    for (Eigen::Index i = start; i < stop; ++i) {
      for (int k = 0; k < rv.dim(); ++k) out(i, k) = rv.marginals[static_cast<std::size_t>(k)].draw(rng);
    }
  });
  return out;
}

}  // namespace dapce

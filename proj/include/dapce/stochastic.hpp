#pragma once

// Independent input random vectors, inverse-CDF sampling, Latin hypercube and
// plain Monte Carlo designs.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dapce/random.hpp"

namespace dapce {

enum class Family { Normal, Lognormal, Gumbel, GaussianMixture, Deterministic, Uniform };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

struct MixtureComponent {
  double weight = 0.0;
  double mean = 0.0;
  double std = 1.0;
};

/// One input variable. Normal, lognormal and Gumbel are parameterized by their
/// mean and standard deviation (see from_cov for the C.O.V. form).
class Marginal {
 public:
  static Marginal normal(double mean, double std);
  static Marginal lognormal(double mean, double std);
  static Marginal gumbel(double mean, double std);
  /// Family given mean and coefficient of variation std/mean.
  static Marginal from_cov(Family family, double mean, double cov);
  static Marginal mixture(std::vector<MixtureComponent> components);
  static Marginal deterministic(double value);
  static Marginal uniform(double lower, double upper);

  Family family() const { return family_; }
  double mean() const;
  double std() const;
  double cov() const { return std() / mean(); }
  const std::vector<MixtureComponent>& components() const { return components_; }
  double lower() const { return a_; }
  double upper() const { return b_; }

  /// Native parameters: lognormal (lambda, zeta) of the underlying normal;
  /// Gumbel (loc, beta); uniform (lower, upper); normal (mean, std).
  double param_a() const { return a_; }
  double param_b() const { return b_; }

  double cdf(double x) const;
  /// Exact inverse for closed-form families; the mixture is inverted by
  /// bracketed root finding on its CDF. Requires 0 < u < 1.
  double inverse_cdf(double u) const;
  /// One independent draw. Mixtures select a component by the alias method and
  /// then invert that component.
  double draw(Rng& rng) const;

 private:
  Family family_ = Family::Deterministic;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<MixtureComponent> components_;
  std::vector<double> alias_prob_;
  std::vector<std::size_t> alias_index_;
};

struct RandomVector {
  std::vector<Marginal> marginals;

  int dim() const { return static_cast<int>(marginals.size()); }
};

/// Rows-per-stream granularity of mcs_sample.
inline constexpr Eigen::Index kSampleBlock = 65536;

/// Latin hypercube design: each column stratified into n equal-probability bins
/// with one uniformly placed point per bin, bins randomly permuted per column,
/// then mapped through the inverse CDF. Column k uses stream k of `seed`.
Eigen::MatrixXd lhs_sample(const RandomVector& rv, Eigen::Index n, std::uint64_t seed);

/// I.i.d. draws. Row block b (of kSampleBlock rows) uses stream b of `seed`,
/// so the result does not depend on `threads`.
Eigen::MatrixXd mcs_sample(const RandomVector& rv, Eigen::Index n, std::uint64_t seed, int threads = 1);

}  // namespace dapce

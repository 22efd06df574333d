#pragma once

// Data-driven orthogonal polynomial bases built from raw moments of the
// (normalized) input sample, plus the total-degree multivariate extension.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dapce {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Empirical raw moments per variable: values(k, j) = mean of xi_k^j, j = 0..max_order.
struct RawMoments {
  Matrix values;

  int dim() const { return static_cast<int>(values.rows()); }
  int max_order() const { return static_cast<int>(values.cols()) - 1; }
  double operator()(int var, int order) const { return values(var, order); }
  /// Moments of one variable, mu^(0) first.
  std::vector<double> of(int var) const;
};

/// Per-variable affine map xi = (x - mean) / std used before any moment computation.
struct NormalizationParams {
  Vector mean;
  Vector std;

  int dim() const { return static_cast<int>(mean.size()); }
  Matrix apply(const Matrix& x) const;
  Vector apply(const Vector& x) const;
  Matrix invert(const Matrix& xi) const;
  void validate() const;
};

/// Means and n-1 standard deviations of each column. Zero variance is rejected.
NormalizationParams fit_normalization(const Matrix& samples);

/// Normalizes `samples`, fitting the parameters when none are supplied.
std::pair<Matrix, NormalizationParams> normalize(
    const Matrix& samples, const std::optional<NormalizationParams>& params = std::nullopt);

/// Raw moments of already-normalized samples (n x d) up to `max_order`.
RawMoments compute_raw_moments(const Matrix& samples, int max_order);

enum class BasisMode { Monic, Orthonormal };

/// Univariate polynomials phi_k^(j), j = 0..order, for every input variable.
///
/// coefficients[k] is lower triangular: row j holds a_0..a_j of phi_k^(j) in
/// increasing powers. norms[k](j) is sqrt(E[(monic phi_k^(j))^2]) computed from
/// the raw moments; orthonormal rows are the monic rows divided by it.
struct UnivariateBasis {
  int order = 0;
  BasisMode mode = BasisMode::Orthonormal;
  std::vector<Matrix> coefficients;
  std::vector<Vector> norms;

  int dim() const { return static_cast<int>(coefficients.size()); }
  /// Horner evaluation of phi_var^(degree)(x).
  double evaluate(int var, int degree, double x) const;
  /// phi_var^(0..order)(x) into `out` (size order + 1).
  void evaluate_all(int var, double x, std::span<double> out) const;
};

/// Solves the moment system of each degree by LU with partial pivoting.
/// Moments up to order 2p are required. Throws IllConditionedMoments when the
/// estimated condition number of a moment matrix exceeds 1e12.
UnivariateBasis build_univariate_basis(const RawMoments& moments, int order,
                                       BasisMode mode = BasisMode::Orthonormal);

inline constexpr double kMaxMomentCondition = 1e12;

/// Closed-form monic coefficients (increasing powers) for degree 0..3 from
/// moments mu^(0..2*degree-1) of one variable, obtained by Cramer's rule on the
/// moment system. For normalized moments (mu1 = 0, mu2 = 1) the degree 2 row
/// reduces to {-1, -mu3, 1}.
Vector closed_form_coeffs(std::span<const double> moments, int degree);

using MultiIndex = std::vector<int>;

/// Total-degree index set in scan order: tuple q (0-based) has digits
/// (q / (p+1)^(d-k)) mod (p+1), first variable most significant; only tuples
/// with digit sum <= p are kept.
struct MultiIndexSet {
  int dim = 0;
  int order = 0;
  std::vector<MultiIndex> indices;

  Index size() const { return static_cast<Index>(indices.size()); }
  const MultiIndex& operator[](Index i) const { return indices[static_cast<std::size_t>(i)]; }
};

/// Enumerates the index set without visiting the (p+1)^d full grid.
MultiIndexSet generate_multi_indices(int dim, int order);

/// (d+p)! / (d! p!), computed exactly; throws on 64-bit overflow.
std::uint64_t total_degree_count(int dim, int order);

/// Product basis Phi_i(xi) = prod_k phi_k^(s_i^k)(xi_k).
class MultiDimBasis {
 public:
  MultiDimBasis() = default;
  MultiDimBasis(UnivariateBasis univariate, MultiIndexSet indices);

  const UnivariateBasis& univariate() const { return univariate_; }
  const MultiIndexSet& indices() const { return indices_; }
  int dim() const { return indices_.dim; }
  int order() const { return indices_.order; }
  Index size() const { return indices_.size(); }

  Vector evaluate(const Vector& xi) const;
  /// Row l of the result is Phi(xi_l) for row l of `xi` (n x d).
  Matrix evaluate(const Matrix& xi) const;

 private:
  struct Factor {
    int var;
    int degree;
  };

  UnivariateBasis univariate_;
  MultiIndexSet indices_;
  std::vector<std::vector<Factor>> factors_;
};

/// Basis over normalized samples: moments of `samples` to 2p, then the product basis.
MultiDimBasis build_basis(const Matrix& normalized_samples, int order,
                          BasisMode mode = BasisMode::Orthonormal);

/// Empirical Gram matrix (1/n) sum_l Phi(xi_l) Phi(xi_l)^T.
Matrix gram_matrix(const MultiDimBasis& basis, const Matrix& samples);

/// max |G_ij - delta_ij| of the empirical Gram matrix.
double gram_deviation(const MultiDimBasis& basis, const Matrix& samples);

struct ClassicalFit {
  Vector coefficients;
  Index rank = 0;
  bool underdetermined = false;
  double residual_norm = 0.0;
};

/// Least-squares collocation for constant expansion coefficients on normalized
/// inputs; the minimum-norm solution is returned for rank-deficient systems.
ClassicalFit fit_classical_apc(const MultiDimBasis& basis, const Matrix& xi, const Vector& y);

}  // namespace dapce

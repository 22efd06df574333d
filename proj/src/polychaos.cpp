#include "dapce/polychaos.hpp"

#include <cmath>
#include <string>

#include "dapce/errors.hpp"
#include "dapce/numerics.hpp"

namespace dapce {

namespace {

constexpr Index kEvalChunk = 65536;

void check_finite(const Matrix& samples, const char* what) {
  for (Index j = 0; j < samples.cols(); ++j) {
    for (Index i = 0; i < samples.rows(); ++i) {
      if (!std::isfinite(samples(i, j))) {
        fail(ErrorKind::NonFiniteInput, std::string(what) + ": non-finite value at row " +
                                            std::to_string(i) + ", column " + std::to_string(j));
      }
    }
  }
}

double det3(const Eigen::Matrix3d& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

}  // namespace

std::vector<double> RawMoments::of(int var) const {
  std::vector<double> out(static_cast<std::size_t>(values.cols()));
  for (Index j = 0; j < values.cols(); ++j) out[static_cast<std::size_t>(j)] = values(var, j);
  return out;
}

Matrix NormalizationParams::apply(const Matrix& x) const {
  require(x.cols() == mean.size(), ErrorKind::InvalidInput,
          "normalization: expected " + std::to_string(mean.size()) + " columns, got " +
              std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  for (Index k = 0; k < x.cols(); ++k) out.col(k) = (x.col(k).array() - mean(k)) / std(k);
  return out;
}

Vector NormalizationParams::apply(const Vector& x) const {
  require(x.size() == mean.size(), ErrorKind::InvalidInput,
          "normalization: expected " + std::to_string(mean.size()) + " values, got " +
              std::to_string(x.size()));
  return ((x - mean).array() / std.array()).matrix();
}

Matrix NormalizationParams::invert(const Matrix& xi) const {
  require(xi.cols() == mean.size(), ErrorKind::InvalidInput, "normalization: column count mismatch");
  Matrix out(xi.rows(), xi.cols());
  for (Index k = 0; k < xi.cols(); ++k) out.col(k) = xi.col(k).array() * std(k) + mean(k);
  return out;
}

void NormalizationParams::validate() const {
  require(mean.size() == std.size() && mean.size() > 0, ErrorKind::InvalidModel,
          "normalization parameters have inconsistent sizes");
  for (Index k = 0; k < std.size(); ++k) {
    require(std::isfinite(mean(k)) && std::isfinite(std(k)) && std(k) > 0.0, ErrorKind::InvalidModel,
            "normalization parameters of variable " + std::to_string(k) + " are invalid");
  }
}

NormalizationParams fit_normalization(const Matrix& samples) {
  require(samples.rows() >= 2, ErrorKind::InvalidInput, "normalization needs at least 2 samples");
  check_finite(samples, "normalize");
  const auto n = static_cast<std::size_t>(samples.rows());
  NormalizationParams params;
  params.mean.resize(samples.cols());
  params.std.resize(samples.cols());
  for (Index k = 0; k < samples.cols(); ++k) {
    const auto col = samples.col(k);
    const double mean = blocked_sum(n, [&](std::size_t i) { return col(static_cast<Index>(i)); }) /
                        static_cast<double>(n);
    const double ss = blocked_sum(n, [&](std::size_t i) {
      const double d = col(static_cast<Index>(i)) - mean;
      return d * d;
    });
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      fail(ErrorKind::DegenerateVariable, "normalize: column " + std::to_string(k) + " has zero variance");
    }
    params.mean(k) = mean;
    params.std(k) = sd;
  }
  return params;
}

std::pair<Matrix, NormalizationParams> normalize(const Matrix& samples,
                                                 const std::optional<NormalizationParams>& params) {
  NormalizationParams p = params ? *params : fit_normalization(samples);
  p.validate();
  return {p.apply(samples), std::move(p)};
}

RawMoments compute_raw_moments(const Matrix& samples, int max_order) {
  require(samples.rows() >= 2, ErrorKind::InvalidInput, "raw moments need at least 2 samples");
  require(max_order >= 1, ErrorKind::InvalidInput, "raw moments need max_order >= 1");
  check_finite(samples, "compute_raw_moments");
  const auto n = static_cast<std::size_t>(samples.rows());
  RawMoments moments;
  moments.values.resize(samples.cols(), max_order + 1);
  std::vector<double> powers(n);
  for (Index k = 0; k < samples.cols(); ++k) {
    moments.values(k, 0) = 1.0;
    std::fill(powers.begin(), powers.end(), 1.0);
    for (int j = 1; j <= max_order; ++j) {
      for (std::size_t i = 0; i < n; ++i) powers[i] *= samples(static_cast<Index>(i), k);
      moments.values(k, j) = blocked_sum(powers) / static_cast<double>(n);
    }
  }
  return moments;
}

double UnivariateBasis::evaluate(int var, int degree, double x) const {
  const Matrix& c = coefficients[static_cast<std::size_t>(var)];
  double acc = c(degree, degree);
  for (int m = degree - 1; m >= 0; --m) acc = acc * x + c(degree, m);
  return acc;
}

void UnivariateBasis::evaluate_all(int var, double x, std::span<double> out) const {
  for (int j = 0; j <= order; ++j) out[static_cast<std::size_t>(j)] = evaluate(var, j, x);
}

UnivariateBasis build_univariate_basis(const RawMoments& moments, int order, BasisMode mode) {
  require(order >= 0, ErrorKind::InvalidInput, "basis order must be non-negative");
  require(moments.max_order() >= 2 * order, ErrorKind::InvalidInput,
          "basis of order " + std::to_string(order) + " needs raw moments up to order " +
              std::to_string(2 * order));
  UnivariateBasis basis;
  basis.order = order;
  basis.mode = mode;
  const int p = order;
  for (int k = 0; k < moments.dim(); ++k) {
    Matrix coeffs = Matrix::Zero(p + 1, p + 1);
    Vector norms(p + 1);
    for (int j = 0; j <= p; ++j) {
      Matrix system = Matrix::Zero(j + 1, j + 1);
      for (int i = 0; i < j; ++i) {
        for (int m = 0; m <= j; ++m) system(i, m) = moments(k, i + m);
      }
      system(j, j) = 1.0;
      Vector rhs = Vector::Zero(j + 1);
      rhs(j) = 1.0;
      Eigen::PartialPivLU<Matrix> lu(system);
      const double rcond = lu.rcond();
      if (!(rcond > 1.0 / kMaxMomentCondition)) {
        fail(ErrorKind::IllConditionedMoments,
             "moment matrix of variable " + std::to_string(k) + ", degree " + std::to_string(j) +
                 " is ill-conditioned (condition estimate " + std::to_string(1.0 / rcond) +
                 "); lower the expansion order or use more samples");
      }
      Vector a = lu.solve(rhs);
      a(j) = 1.0;
      double norm_sq = 0.0;
      for (int m = 0; m <= j; ++m) {
        for (int mm = 0; mm <= j; ++mm) norm_sq += a(m) * a(mm) * moments(k, m + mm);
      }
      if (!(norm_sq > 0.0) || !std::isfinite(norm_sq)) {
        fail(ErrorKind::IllConditionedMoments,
             "degree " + std::to_string(j) + " polynomial of variable " + std::to_string(k) +
                 " has non-positive norm; the sample does not support this order");
      }
      norms(j) = std::sqrt(norm_sq);
      if (mode == BasisMode::Orthonormal) a /= norms(j);
      coeffs.row(j).head(j + 1) = a.transpose();
    }
    basis.coefficients.push_back(std::move(coeffs));
    basis.norms.push_back(std::move(norms));
  }
  return basis;
}

Vector closed_form_coeffs(std::span<const double> mu, int degree) {
  if (degree < 0 || degree > 3) {
    fail(ErrorKind::UnsupportedDegree,
         "closed-form coefficients exist for degrees 0..3, requested " + std::to_string(degree));
  }
  const auto needed = static_cast<std::size_t>(std::max(1, 2 * degree));
  require(mu.size() >= needed, ErrorKind::InvalidInput,
          "closed-form degree " + std::to_string(degree) + " needs moments up to order " +
              std::to_string(needed - 1));
  Vector a = Vector::Zero(degree + 1);
  a(degree) = 1.0;
  switch (degree) {
    case 0:
      break;
    case 1:
      a(0) = -mu[1] / mu[0];
      break;
    case 2: {
      const double det = mu[0] * mu[2] - mu[1] * mu[1];
      a(0) = (mu[1] * mu[3] - mu[2] * mu[2]) / det;
      a(1) = (mu[1] * mu[2] - mu[0] * mu[3]) / det;
      break;
    }
    case 3: {
      Eigen::Matrix3d h;
      h << mu[0], mu[1], mu[2], mu[1], mu[2], mu[3], mu[2], mu[3], mu[4];
      const Eigen::Vector3d b(-mu[3], -mu[4], -mu[5]);
      const double det = det3(h);
      for (int c = 0; c < 3; ++c) {
        Eigen::Matrix3d hc = h;
        hc.col(c) = b;
        a(c) = det3(hc) / det;
      }
      break;
    }
  }
  return a;
}

std::uint64_t total_degree_count(int dim, int order) {
  require(dim >= 1 && order >= 0, ErrorKind::InvalidInput, "index set needs d >= 1 and p >= 0");
  unsigned __int128 result = 1;
  for (int i = 1; i <= order; ++i) {
    result = result * static_cast<unsigned>(dim + i) / static_cast<unsigned>(i);
    require(result <= ~std::uint64_t{0}, ErrorKind::InvalidInput, "index set size overflows 64 bits");
  }
  return static_cast<std::uint64_t>(result);
}

MultiIndexSet generate_multi_indices(int dim, int order) {
  const std::uint64_t expected = total_degree_count(dim, order);
  require(expected <= (std::uint64_t{1} << 26), ErrorKind::InvalidInput,
          "index set of " + std::to_string(expected) + " terms is too large");
  MultiIndexSet set;
  set.dim = dim;
  set.order = order;
  set.indices.reserve(static_cast<std::size_t>(expected));
  // Depth-first over digits in scan order; deeper digits only take values that
  // keep the running sum within the order, which skips exactly the filtered tuples.
  MultiIndex current(static_cast<std::size_t>(dim), 0);
  auto visit = [&](auto&& self, int k, int remaining) -> void {
    if (k == dim) {
      set.indices.push_back(current);
      return;
    }
    for (int s = 0; s <= remaining; ++s) {
      current[static_cast<std::size_t>(k)] = s;
      self(self, k + 1, remaining - s);
    }
    current[static_cast<std::size_t>(k)] = 0;
  };
  visit(visit, 0, order);
  return set;
}

MultiDimBasis::MultiDimBasis(UnivariateBasis univariate, MultiIndexSet indices)
    : univariate_(std::move(univariate)), indices_(std::move(indices)) {
  require(univariate_.dim() == indices_.dim, ErrorKind::InvalidModel,
          "univariate basis and index set disagree on the input dimension");
  require(univariate_.order >= indices_.order, ErrorKind::InvalidModel,
          "univariate basis order is lower than the index set order");
  factors_.reserve(indices_.indices.size());
  for (const auto& tuple : indices_.indices) {
    std::vector<Factor> f;
    for (int k = 0; k < indices_.dim; ++k) {
      const int degree = tuple[static_cast<std::size_t>(k)];
      if (degree > 0) f.push_back({k, degree});
    }
    factors_.push_back(std::move(f));
  }
}

Vector MultiDimBasis::evaluate(const Vector& xi) const {
  require(xi.size() == dim(), ErrorKind::InvalidInput, "basis evaluation: dimension mismatch");
  const int p = univariate_.order;
  Matrix table(p + 1, dim());
  for (int k = 0; k < dim(); ++k) {
    univariate_.evaluate_all(k, xi(k), std::span<double>(table.col(k).data(), static_cast<std::size_t>(p + 1)));
  }
  Vector out(size());
  for (Index i = 0; i < size(); ++i) {
    double v = 1.0;
    for (const Factor& f : factors_[static_cast<std::size_t>(i)]) v *= table(f.degree, f.var);
    out(i) = v;
  }
  return out;
}

Matrix MultiDimBasis::evaluate(const Matrix& xi) const {
  require(xi.cols() == dim(), ErrorKind::InvalidInput, "basis evaluation: dimension mismatch");
  const Index n = xi.rows();
  const int p = univariate_.order;
  // values[k] is n x (p+1): phi_k^(j)(xi_lk).
  std::vector<Matrix> values(static_cast<std::size_t>(dim()));
  for (int k = 0; k < dim(); ++k) {
    Matrix& v = values[static_cast<std::size_t>(k)];
    v.resize(n, p + 1);
    const Matrix& c = univariate_.coefficients[static_cast<std::size_t>(k)];
    for (int j = 0; j <= p; ++j) {
      auto col = v.col(j);
      col.setConstant(c(j, j));
      for (int m = j - 1; m >= 0; --m) col = (col.array() * xi.col(k).array() + c(j, m)).matrix();
    }
  }
  Matrix out(n, size());
  for (Index i = 0; i < size(); ++i) {
    const auto& f = factors_[static_cast<std::size_t>(i)];
    auto col = out.col(i);
    if (f.empty()) {
      col.setOnes();
      continue;
    }
    col = values[static_cast<std::size_t>(f[0].var)].col(f[0].degree);
    for (std::size_t t = 1; t < f.size(); ++t) {
      col = col.cwiseProduct(values[static_cast<std::size_t>(f[t].var)].col(f[t].degree));
    }
  }
  return out;
}

MultiDimBasis build_basis(const Matrix& normalized_samples, int order, BasisMode mode) {
  const RawMoments moments = compute_raw_moments(normalized_samples, std::max(1, 2 * order));
  return MultiDimBasis(build_univariate_basis(moments, order, mode),
                       generate_multi_indices(static_cast<int>(normalized_samples.cols()), order));
}

Matrix gram_matrix(const MultiDimBasis& basis, const Matrix& samples) {
  require(samples.rows() >= 1, ErrorKind::InvalidInput, "Gram matrix needs samples");
  Matrix gram = Matrix::Zero(basis.size(), basis.size());
  for (Index start = 0; start < samples.rows(); start += kEvalChunk) {
    const Index rows = std::min(kEvalChunk, samples.rows() - start);
    const Matrix phi = basis.evaluate(Matrix(samples.middleRows(start, rows)));
    gram.noalias() += phi.transpose() * phi;
  }
  return gram / static_cast<double>(samples.rows());
}

double gram_deviation(const MultiDimBasis& basis, const Matrix& samples) {
  const Matrix g = gram_matrix(basis, samples);
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

ClassicalFit fit_classical_apc(const MultiDimBasis& basis, const Matrix& xi, const Vector& y) {
  require(xi.rows() == y.size(), ErrorKind::InvalidInput, "classical aPC: input/output count mismatch");
  require(xi.rows() >= 1, ErrorKind::InvalidInput, "classical aPC: no data");
  const Matrix phi = basis.evaluate(xi);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(phi);
  ClassicalFit fit;
  fit.coefficients = cod.solve(y);
  fit.rank = cod.rank();
  fit.underdetermined = xi.rows() < basis.size();
  fit.residual_norm = (phi * fit.coefficients - y).norm();
  return fit;
}

}  // namespace dapce

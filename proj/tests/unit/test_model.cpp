#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dapce/benchmarks.hpp"
#include "dapce/errors.hpp"
#include "dapce/model.hpp"
#include "dapce/random.hpp"
#include "dapce/stochastic.hpp"

using namespace dapce;

namespace {

Matrix normal_pool(Index n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) x(i, k) = 2.0 + 0.5 * rng.normal();
  return x;
}

// Network whose output is the constant vector c: zero weights, final bias c.
void freeze_to_constant(DeepAPCEModel& m, const Vector& c) {
  m.params = m.params.zeros_like();
  m.params.layers.back().bias = c.transpose();
}

double quadratic_response(const Eigen::RowVectorXd& x) { return 1.0 + x(0) - 0.5 * x(1) * x(1) + 0.3 * x(0) * x(2); }

LabeledSet label(const Matrix& x) {
  LabeledSet s{x, Vector(x.rows())};
  for (Index i = 0; i < x.rows(); ++i) s.y(i) = quadratic_response(x.row(i));
  return s;
}

}  // namespace

TEST(Model, ShapeContract) {
  const DeepAPCEModel m = make_model(normal_pool(2000, 4, 1), 2, {8, 8});
  EXPECT_EQ(m.size(), 15);
  EXPECT_EQ(m.spec.output, 15);
  EXPECT_EQ(m.coefficients(Vector::Zero(4).eval()).size(), 15);
  Vector wrong = Vector::Zero(3);
  EXPECT_THROW(m.coefficients(wrong), Error);
}

TEST(Model, ZeroNetworkAndDeterminism) {
  DeepAPCEModel m = make_model(normal_pool(2000, 3, 2), 2, {8});
  const Vector xi = Vector::Constant(3, 0.3);
  const Vector a = m.coefficients(xi);
  const Vector b = m.coefficients(xi);
  EXPECT_TRUE((a.array() == b.array()).all());
  m.params = m.params.zeros_like();
  EXPECT_TRUE((m.coefficients(xi).array() == 0.0).all());
}

TEST(Model, PredictCompositionIdentity) {
  const DeepAPCEModel m = make_model(normal_pool(2000, 3, 3), 2, {16, 16});
  const Matrix x = normal_pool(50, 3, 4);
  const Vector batch = m.predict(x);
  for (Index i = 0; i < x.rows(); ++i) {
    const Vector xi = m.normalization.apply(Vector(x.row(i).transpose()));
    const double composed = m.coefficients(xi).dot(m.basis.evaluate(xi));
    EXPECT_EQ(m.predict(Vector(x.row(i).transpose())), composed);
    EXPECT_NEAR(batch(i), composed, 1e-12 * (1.0 + std::abs(composed)));
  }
  EXPECT_TRUE((m.predict(x, 3).array() == batch.array()).all());
}

TEST(Model, ConstantNetworkEqualsClassicalApc) {
  const Matrix pool = normal_pool(5000, 3, 5);
  DeepAPCEModel m = make_model(pool, 2, {8});
  const LabeledSet train_set = label(normal_pool(200, 3, 6));
  const ClassicalFit fit = fit_classical_apc(m.basis, m.normalization.apply(train_set.x), train_set.y);
  freeze_to_constant(m, fit.coefficients);
  const Matrix probe = normal_pool(100, 3, 7);
  const Vector deep = m.predict(probe);
  const Vector classical = predict_classical(m, fit.coefficients, probe);
  EXPECT_LT((deep - classical).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Model, OrderZeroPredictsFirstCoefficient) {
  DeepAPCEModel m = make_model(normal_pool(500, 2, 8), 0, {4});
  ASSERT_EQ(m.size(), 1);
  const Matrix x = normal_pool(10, 2, 9);
  for (Index i = 0; i < x.rows(); ++i) {
    const Vector xr = x.row(i).transpose();
    EXPECT_DOUBLE_EQ(m.predict(xr), m.coefficients(m.normalization.apply(xr))(0));
  }
  EXPECT_EQ(loss_ce1(m, x), 0.0);
}

TEST(Loss, GdNorms) {
  DeepAPCEModel m = make_model(normal_pool(500, 1, 10), 0, {4});
  freeze_to_constant(m, Vector::Constant(1, 1.0));
  LabeledSet one{Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 3.0)};
  EXPECT_DOUBLE_EQ(loss_gd(m, one, LossNorm::L1), 2.0);
  EXPECT_DOUBLE_EQ(loss_gd(m, one, LossNorm::L2), 4.0);
  LabeledSet perfect{Matrix::Constant(3, 1, 2.0), Vector::Constant(3, 1.0)};
  EXPECT_EQ(loss_gd(m, perfect), 0.0);
  LabeledSet pair{Matrix(2, 1), Vector(2)};
  pair.x << 1.0, 2.0;
  pair.y << 0.0, 5.0;
  LabeledSet doubled{Matrix(4, 1), Vector(4)};
  doubled.x << 1.0, 2.0, 1.0, 2.0;
  doubled.y << 0.0, 5.0, 0.0, 5.0;
  EXPECT_DOUBLE_EQ(loss_gd(m, pair), loss_gd(m, doubled));
}

TEST(Loss, ConstantCoefficientsOnMomentSample) {
  // One input, p = 2: on the moment sample Phi_2, Phi_3 have zero mean and
  // unit 1/n variance and are uncorrelated, so the n-1 variance of
  // sum c_i Phi_i is tail * n/(n-1).
  const Matrix pool = normal_pool(4000, 1, 11);
  DeepAPCEModel m = make_model(pool, 2, {4});
  Vector c(3);
  c << 2.0, 0.7, -0.4;
  freeze_to_constant(m, c);
  const double n = 4000.0;
  const double tail = 0.7 * 0.7 + 0.4 * 0.4;
  EXPECT_LT(loss_ce1(m, pool), 1e-12);
  EXPECT_NEAR(loss_ce2m(m, pool), tail / (n - 1.0), 1e-10);
}

TEST(Loss, Ce2mHomogeneity) {
  const Matrix pool = normal_pool(4000, 2, 12);
  DeepAPCEModel m = make_model(pool, 2, {4});
  Vector c(m.size());
  for (Index i = 0; i < c.size(); ++i) c(i) = 0.1 * static_cast<double>(i + 1);
  freeze_to_constant(m, c);
  const Matrix fresh = normal_pool(3000, 2, 13);
  const double base = loss_ce2m(m, fresh);
  ASSERT_GT(base, 0.0);
  Vector c2 = c;
  c2.tail(c.size() - 1) *= 2.0;
  freeze_to_constant(m, c2);
  EXPECT_NEAR(loss_ce2m(m, fresh), 4.0 * base, 1e-9 * base);
}

TEST(Loss, Ce1ShiftInvariance) {
  const Matrix pool = normal_pool(3000, 2, 14);
  DeepAPCEModel m = make_model(pool, 2, {4});
  Vector c = Vector::Constant(m.size(), 0.2);
  freeze_to_constant(m, c);
  const Matrix fresh = normal_pool(1000, 2, 15);
  const double before = loss_ce1(m, fresh);
  c(0) += 3.0;  // shifts every prediction and C_1 by 3
  freeze_to_constant(m, c);
  EXPECT_NEAR(loss_ce1(m, fresh), before, 1e-12);
}

TEST(Loss, TotalCostComposition) {
  const Matrix pool = normal_pool(3000, 3, 16);
  DeepAPCEModel m = make_model(pool, 2, {8});
  const LabeledSet l = label(normal_pool(30, 3, 17));
  const Matrix u = normal_pool(500, 3, 18);
  const CostTerms zero_lambda = total_cost(m, l, u, 0.0);
  EXPECT_DOUBLE_EQ(zero_lambda.total, loss_gd(m, l));
  const CostTerms t = total_cost(m, l, u, 2.5);
  EXPECT_NEAR(t.total, t.gd + 2.5 * (t.ce1 + t.ce2m), 1e-15);
  EXPECT_NEAR(t.ce1, loss_ce1(m, u), 1e-15);
  EXPECT_NEAR(t.ce2m, loss_ce2m(m, u), 1e-15);
}

TEST(Loss, CostGradientMatchesFiniteDifferences) {
  Rng rng(19);
  const Index nl = 6, nu = 9, mm = 5;
  Matrix cl(nl, mm), pl(nl, mm), cu(nu, mm), pu(nu, mm);
  Vector y(nl);
  for (Index i = 0; i < cl.size(); ++i) cl.data()[i] = rng.normal();
  for (Index i = 0; i < pl.size(); ++i) pl.data()[i] = rng.normal();
  for (Index i = 0; i < cu.size(); ++i) cu.data()[i] = rng.normal();
  for (Index i = 0; i < pu.size(); ++i) pu.data()[i] = rng.normal();
  pl.col(0).setOnes();
  pu.col(0).setOnes();
  for (Index i = 0; i < nl; ++i) y(i) = rng.normal();
  for (LossNorm norm : {LossNorm::L1, LossNorm::L2}) {
    Matrix gl, gu;
    cost_terms(cl, pl, y, cu, pu, 1.7, norm, &gl, &gu);
    const double h = 1e-6;
    for (Index i = 0; i < cl.size(); ++i) {
      Matrix a = cl, b = cl;
      a.data()[i] += h;
      b.data()[i] -= h;
      const double fd = (cost_terms(a, pl, y, cu, pu, 1.7, norm).total - cost_terms(b, pl, y, cu, pu, 1.7, norm).total) / (2 * h);
      EXPECT_NEAR(gl.data()[i], fd, 1e-6);
    }
    for (Index i = 0; i < cu.size(); ++i) {
      Matrix a = cu, b = cu;
      a.data()[i] += h;
      b.data()[i] -= h;
      const double fd = (cost_terms(cl, pl, y, a, pu, 1.7, norm).total - cost_terms(cl, pl, y, b, pu, 1.7, norm).total) / (2 * h);
      EXPECT_NEAR(gu.data()[i], fd, 1e-6);
    }
  }
}

TEST(Train, ZeroEpochsLeavesModel) {
  const Matrix pool = normal_pool(2000, 3, 20);
  DeepAPCEModel m = make_model(pool, 2, {8});
  const DeepAPCEModel before = m;
  TrainingConfig cfg;
  cfg.epochs = 0;
  const TrainingResult r = train(m, label(normal_pool(20, 3, 21)), pool, cfg);
  EXPECT_TRUE(r.history.empty());
  for (std::size_t i = 0; i < m.params.parameter_count(); ++i) EXPECT_EQ(m.params.at(i), before.params.at(i));
}

TEST(Train, ReducesCostAndIsReproducible) {
  const Matrix pool = normal_pool(5000, 3, 22);
  const LabeledSet l = label(normal_pool(60, 3, 23));
  TrainingConfig cfg;
  cfg.epochs = 300;
  cfg.schedule = {0.005, 0.8, 100};
  cfg.unlabeled_batch = 256;
  cfg.seed = 4;
  DeepAPCEModel a = make_model(pool, 2, {16, 16}, Activation::Relu, 1);
  DeepAPCEModel b = make_model(pool, 2, {16, 16}, Activation::Relu, 1);
  const TrainingResult ra = train(a, l, pool, cfg);
  const TrainingResult rb = train(b, l, pool, cfg);
  ASSERT_EQ(ra.history.size(), 300u);
  EXPECT_LT(ra.history.back().cost.total, 0.5 * ra.history.front().cost.total);
  std::ostringstream sa, sb;
  write_history_csv(sa, ra.history);
  write_history_csv(sb, rb.history);
  EXPECT_EQ(sa.str(), sb.str());
  for (std::size_t i = 0; i < a.params.parameter_count(); ++i) ASSERT_EQ(a.params.at(i), b.params.at(i));
  for (const auto& h : ra.history) EXPECT_TRUE(std::isfinite(h.cost.total));
  EXPECT_EQ(a.epoch, 300);
}

TEST(Train, LambdaZeroHistoryIsSupervisedLoss) {
  const Matrix pool = normal_pool(2000, 3, 24);
  const LabeledSet l = label(normal_pool(40, 3, 25));
  TrainingConfig cfg;
  cfg.epochs = 20;
  cfg.lambda = 0.0;
  cfg.norm = LossNorm::L2;
  DeepAPCEModel m = make_model(pool, 2, {8});
  const TrainingResult r = train(m, l, pool, cfg);
  for (const auto& h : r.history) {
    EXPECT_EQ(h.cost.total, h.cost.gd);
  }
}

TEST(Train, NonFiniteCostAbortsWithLastGoodState) {
  const Matrix pool = normal_pool(1000, 2, 26);
  DeepAPCEModel m = make_model(pool, 1, {4});
  LabeledSet l = label(Matrix(normal_pool(10, 3, 27).leftCols(2)));
  l.y.setConstant(1e300);  // squared residuals overflow
  TrainingConfig cfg;
  cfg.epochs = 5;
  cfg.norm = LossNorm::L2;
  try {
    train(m, l, pool, cfg);
    FAIL();
  } catch (const TrainingAborted& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericFailure);
    EXPECT_TRUE(e.last_good().params.all_finite());
  }
}

TEST(Train, RejectsNonFiniteLabeledRow) {
  const Matrix pool = normal_pool(1000, 2, 28);
  DeepAPCEModel m = make_model(pool, 1, {4});
  LabeledSet l{normal_pool(5, 2, 29), Vector::Ones(5)};
  l.x(3, 1) = NAN;
  try {
    train(m, l, pool, TrainingConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteInput);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
}

TEST(Residuals, ZeroNetworkAndConstantCoefficients) {
  const Matrix pool = normal_pool(20000, 2, 30);
  DeepAPCEModel m = make_model(pool, 2, {4});
  m.params = m.params.zeros_like();
  const PropertyResiduals z = property_residuals(m, pool);
  EXPECT_EQ(z.r_mean, 0.0);
  EXPECT_EQ(z.r_var, 0.0);
  Vector c(m.size());
  for (Index i = 0; i < c.size(); ++i) c(i) = 1.0 / static_cast<double>(i + 1);
  freeze_to_constant(m, c);
  const PropertyResiduals r = property_residuals(m, normal_pool(200000, 2, 31));
  EXPECT_LT(r.r_mean / std::sqrt(r.variance), 0.02);
  EXPECT_LT(r.r_var / r.variance, 0.05);
}

TEST(Bundle, RoundTrip) {
  const Matrix pool = normal_pool(2000, 3, 32);
  DeepAPCEModel m = make_model(pool, 2, {8, 4}, Activation::Gelu, 3);
  TrainingConfig cfg;
  cfg.epochs = 5;
  train(m, label(normal_pool(20, 3, 33)), pool, cfg);
  const Bytes bytes = save_model(m);
  const DeepAPCEModel back = load_model(bytes);
  EXPECT_EQ(back.epoch, 5);
  const Matrix probe = normal_pool(100, 3, 34);
  EXPECT_TRUE((m.predict(probe).array() == back.predict(probe).array()).all());
  Bytes bad = bytes;
  bad[bytes.size() / 3] ^= 1;
  EXPECT_THROW(load_model(bad), Error);
  EXPECT_THROW(load_model(Bytes(bytes.begin(), bytes.begin() + 30)), Error);
}

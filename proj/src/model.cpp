#include "dapce/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "dapce/numerics.hpp"
#include "dapce/parallel.hpp"
#include "dapce/random.hpp"
#include "dapce/uq.hpp"

namespace dapce {

namespace {

constexpr Index kPredictBlock = 8192;
constexpr std::string_view kModelMagic = "DAPCEMDL";

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& rows, std::size_t count) {
  Matrix out(static_cast<Index>(count), src.cols());
  for (std::size_t i = 0; i < count; ++i) out.row(static_cast<Index>(i)) = src.row(static_cast<Index>(rows[i]));
  return out;
}

void check_unlabeled(const Matrix& x, int dim) {
  require(x.cols() == dim, ErrorKind::InvalidInput,
          "unlabeled inputs have " + std::to_string(x.cols()) + " columns, model expects " + std::to_string(dim));
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      if (!std::isfinite(x(i, j))) {
        fail(ErrorKind::NonFiniteInput, "unlabeled inputs: non-finite value at row " + std::to_string(i) +
                                            ", column " + std::to_string(j));
      }
    }
  }
}

}  // namespace

std::string to_string(LossNorm n) { return n == LossNorm::L1 ? "l1" : "l2"; }

LossNorm loss_norm_from_string(const std::string& name) {
  if (name == "l1" || name == "L1") return LossNorm::L1;
  if (name == "l2" || name == "L2") return LossNorm::L2;
  fail(ErrorKind::Config, "unknown loss norm '" + name + "' (expected l1 or l2)");
}

void LabeledSet::validate(int dim) const {
  require(x.rows() == y.size(), ErrorKind::InvalidInput, "labeled inputs and outputs differ in length");
  require(x.rows() >= 1, ErrorKind::InvalidInput, "labeled set is empty");
  require(x.cols() == dim, ErrorKind::InvalidInput,
          "labeled inputs have " + std::to_string(x.cols()) + " columns, model expects " + std::to_string(dim));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (!std::isfinite(x(i, j))) {
        fail(ErrorKind::NonFiniteInput,
             "labeled inputs: non-finite value at row " + std::to_string(i) + ", column " + std::to_string(j));
      }
    }
    if (!std::isfinite(y(i))) fail(ErrorKind::NonFiniteInput, "labeled outputs: non-finite value at row " + std::to_string(i));
  }
}

void TrainingConfig::validate() const {
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::InvalidInput, "lambda must be non-negative");
  require(epochs >= 0, ErrorKind::InvalidInput, "epoch count must be non-negative");
  require(unlabeled_batch >= 0, ErrorKind::InvalidInput, "unlabeled batch size must be non-negative");
  schedule.validate();
}

Vector DeepAPCEModel::coefficients(const Vector& xi) const {
  require(xi.size() == dim(), ErrorKind::InvalidModel, "coefficient query has the wrong input width");
  return forward(spec, params, xi);
}

Matrix DeepAPCEModel::coefficients(const Matrix& xi) const {
  require(xi.cols() == dim(), ErrorKind::InvalidModel, "coefficient query has the wrong input width");
  return forward(spec, params, xi);
}

double DeepAPCEModel::predict(const Vector& x) const {
  require(x.allFinite(), ErrorKind::NonFiniteInput, "prediction input contains non-finite values");
  const Vector xi = normalization.apply(x);
  return coefficients(xi).dot(basis.evaluate(xi));
}

Vector DeepAPCEModel::predict_normalized(const Matrix& xi) const {
  const Matrix c = coefficients(xi);
  const Matrix phi = basis.evaluate(xi);
  return c.cwiseProduct(phi).rowwise().sum();
}

Vector DeepAPCEModel::predict(const Matrix& x, int threads) const {
  require(x.cols() == dim(), ErrorKind::InvalidInput,
          "prediction inputs have " + std::to_string(x.cols()) + " columns, model expects " + std::to_string(dim()));
  Vector out(x.rows());
  const auto blocks = static_cast<std::size_t>((x.rows() + kPredictBlock - 1) / kPredictBlock);
  parallel_blocks(blocks, threads, [&](std::size_t b) {
    const Index start = static_cast<Index>(b) * kPredictBlock;
    const Index rows = std::min(kPredictBlock, x.rows() - start);
    const Matrix block = x.middleRows(start, rows);
    require(block.allFinite(), ErrorKind::NonFiniteInput, "prediction inputs contain non-finite values");
    out.segment(start, rows) = predict_normalized(normalization.apply(block));
  });
  return out;
}

void DeepAPCEModel::validate() const {
  normalization.validate();
  require(normalization.dim() == dim(), ErrorKind::InvalidModel, "normalization width differs from basis dimension");
  require(spec.input == dim(), ErrorKind::InvalidModel, "network input width differs from basis dimension");
  require(spec.output == size(), ErrorKind::InvalidModel,
          "network output width " + std::to_string(spec.output) + " differs from basis size " + std::to_string(size()));
  params.validate(spec);
}

DeepAPCEModel make_model(const Matrix& pool, int order, const std::vector<int>& hidden, Activation activation,
                         std::uint64_t seed) {
  require(order >= 0, ErrorKind::InvalidInput, "expansion order must be non-negative");
  DeepAPCEModel m;
  auto [xi, norm] = normalize(pool);
  m.normalization = std::move(norm);
  m.basis = build_basis(xi, order, BasisMode::Orthonormal);
  m.spec.input = static_cast<int>(pool.cols());
  m.spec.hidden = hidden;
  m.spec.output = static_cast<int>(m.basis.size());
  m.spec.activation = activation;
  m.spec.seed = seed;
  m.params = init_params(m.spec);
  m.adam = make_adam_state(m.params);
  return m;
}

CostTerms cost_terms(const Matrix& c_l, const Matrix& phi_l, const Vector& y, const Matrix& c_u, const Matrix& phi_u,
                     double lambda, LossNorm norm, Matrix* grad_l, Matrix* grad_u) {
  require(c_l.rows() == phi_l.rows() && c_l.cols() == phi_l.cols() && c_l.rows() == y.size(), ErrorKind::InvalidInput,
          "labeled coefficient, basis and target shapes differ");
  require(c_u.rows() == phi_u.rows() && c_u.cols() == phi_u.cols(), ErrorKind::InvalidInput,
          "unlabeled coefficient and basis shapes differ");
  require(c_l.rows() >= 1, ErrorKind::InvalidInput, "labeled batch is empty");
  require(c_u.rows() != 1, ErrorKind::InvalidInput, "unlabeled batch needs at least 2 rows");
  CostTerms t;
  const double nl = static_cast<double>(c_l.rows());
  const Vector err = c_l.cwiseProduct(phi_l).rowwise().sum() - y;
  Vector dl(err.size());
  if (norm == LossNorm::L1) {
    t.gd = err.cwiseAbs().sum() / nl;
    for (Index i = 0; i < err.size(); ++i) dl(i) = sign_or_zero(err(i)) / nl;
  } else {
    t.gd = err.squaredNorm() / nl;
    dl = 2.0 * err / nl;
  }
  if (grad_l) *grad_l = dl.asDiagonal() * phi_l;

  if (c_u.rows() >= 2) {
    const double nu = static_cast<double>(c_u.rows());
    const Vector yhat = c_u.cwiseProduct(phi_u).rowwise().sum();
    const double ybar = yhat.mean();
    const Eigen::RowVectorXd mc = c_u.colwise().mean();
    const double d1 = ybar - mc(0);
    const Vector centered = yhat.array() - ybar;
    const double var = centered.squaredNorm() / (nu - 1.0);
    const double tail = mc.size() > 1 ? mc.tail(mc.size() - 1).squaredNorm() : 0.0;
    const double d2 = var - tail;
    t.ce1 = std::abs(d1);
    t.ce2m = std::abs(d2);
    if (grad_u) {
      const double s1 = lambda * sign_or_zero(d1);
      const double s2 = lambda * sign_or_zero(d2);
      Matrix g = phi_u * (s1 / nu);
      g.col(0).array() -= s1 / nu;
      g += (centered * (2.0 * s2 / (nu - 1.0))).asDiagonal() * phi_u;
      if (mc.size() > 1) {
        const Eigen::RowVectorXd shift = mc.tail(mc.size() - 1) * (2.0 * s2 / nu);
        g.rightCols(mc.size() - 1).rowwise() -= shift;
      }
      *grad_u = std::move(g);
    }
  } else if (grad_u) {
    *grad_u = Matrix::Zero(c_u.rows(), c_u.cols());
  }
  t.total = t.gd + lambda * (t.ce1 + t.ce2m);
  return t;
}

namespace {

struct Evaluated {
  Matrix c;
  Matrix phi;
};

Evaluated evaluate_rows(const DeepAPCEModel& model, const Matrix& x) {
  const Matrix xi = model.normalization.apply(x);
  return {model.coefficients(xi), model.basis.evaluate(xi)};
}

}  // namespace

double loss_gd(const DeepAPCEModel& model, const LabeledSet& labeled, LossNorm norm) {
  labeled.validate(model.dim());
  const Evaluated l = evaluate_rows(model, labeled.x);
  const Matrix empty(0, model.size());
  return cost_terms(l.c, l.phi, labeled.y, empty, empty, 0.0, norm).gd;
}

CostTerms total_cost(const DeepAPCEModel& model, const LabeledSet& labeled, const Matrix& unlabeled_x, double lambda,
                     LossNorm norm) {
  labeled.validate(model.dim());
  check_unlabeled(unlabeled_x, model.dim());
  const Evaluated l = evaluate_rows(model, labeled.x);
  const Evaluated u = evaluate_rows(model, unlabeled_x);
  return cost_terms(l.c, l.phi, labeled.y, u.c, u.phi, lambda, norm);
}

namespace {

CostTerms unlabeled_terms(const DeepAPCEModel& model, const Matrix& unlabeled_x) {
  check_unlabeled(unlabeled_x, model.dim());
  require(unlabeled_x.rows() >= 2, ErrorKind::InvalidInput, "unlabeled batch needs at least 2 rows");
  const Evaluated u = evaluate_rows(model, unlabeled_x);
  // A zero-residual labeled row built from the first unlabeled point leaves gd at 0.
  const Matrix c0 = u.c.topRows(1);
  const Matrix p0 = u.phi.topRows(1);
  const Vector y0 = c0.cwiseProduct(p0).rowwise().sum();
  return cost_terms(c0, p0, y0, u.c, u.phi, 1.0, LossNorm::L1);
}

}  // namespace

double loss_ce1(const DeepAPCEModel& model, const Matrix& unlabeled_x) { return unlabeled_terms(model, unlabeled_x).ce1; }

double loss_ce2m(const DeepAPCEModel& model, const Matrix& unlabeled_x) {
  return unlabeled_terms(model, unlabeled_x).ce2m;
}

TrainingResult train(DeepAPCEModel& model, const LabeledSet& labeled, const Matrix& unlabeled_x,
                     const TrainingConfig& config, const EpochObserver& observer) {
  config.validate();
  model.validate();
  labeled.validate(model.dim());
  check_unlabeled(unlabeled_x, model.dim());
  require(config.lambda == 0.0 || unlabeled_x.rows() >= 2, ErrorKind::InvalidInput,
          "training with lambda > 0 needs at least 2 unlabeled rows");

  const Matrix xi_l = model.normalization.apply(labeled.x);
  const Matrix phi_l = model.basis.evaluate(xi_l);
  const Matrix xi_pool = model.normalization.apply(unlabeled_x);
  const auto pool = static_cast<std::size_t>(xi_pool.rows());
  const bool full_pool = config.unlabeled_batch == 0 || static_cast<std::size_t>(config.unlabeled_batch) >= pool;
  const std::size_t nu = config.lambda == 0.0 ? 0 : (full_pool ? pool : static_cast<std::size_t>(config.unlabeled_batch));
  const Index nl = xi_l.rows();

  Matrix phi_full_pool;
  if (nu > 0 && full_pool) phi_full_pool = model.basis.evaluate(xi_pool);

  Rng rng(stream_seed(config.seed, 0x7261696EULL));
  std::vector<std::size_t> order(pool);
  std::iota(order.begin(), order.end(), std::size_t{0});

  model.adam = make_adam_state(model.params);
  model.schedule = config.schedule;
  model.epoch = 0;

  TrainingResult result;
  result.history.reserve(static_cast<std::size_t>(config.epochs));
  NetworkParams prev_params = model.params;
  AdamState prev_adam = model.adam;

  Matrix batch(nl + static_cast<Index>(nu), model.dim());
  batch.topRows(nl) = xi_l;
  if (nu > 0 && full_pool) batch.bottomRows(static_cast<Index>(nu)) = xi_pool;
  Matrix phi_u;
  if (nu > 0 && full_pool) phi_u = phi_full_pool;

  ForwardTape tape;
  Matrix grad_l, grad_u;
  Matrix upstream(batch.rows(), model.size());
  for (std::int64_t ep = 0; ep < config.epochs; ++ep) {
    const double lr = config.schedule.rate(ep);
    if (nu > 0 && !full_pool) {
      for (std::size_t i = 0; i < nu; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool - i));
        std::swap(order[i], order[j]);
      }
      batch.bottomRows(static_cast<Index>(nu)) = gather_rows(xi_pool, order, nu);
      phi_u = model.basis.evaluate(Matrix(batch.bottomRows(static_cast<Index>(nu))));
    }
    auto abort = [&](const std::string& why) {
      Checkpoint last{model.spec, prev_params, prev_adam, config.schedule, ep > 0 ? ep - 1 : 0};
      throw TrainingAborted("training aborted at epoch " + std::to_string(ep) + ": " + why +
                                "; the last finite state (epoch " + std::to_string(last.epoch) + ") is attached",
                            std::move(last));
    };
    Matrix c;
    try {
      c = forward(model.spec, model.params, batch, &tape);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NumericOverflow) throw;
      abort(e.what());
    }
    const Matrix c_u = nu > 0 ? Matrix(c.bottomRows(static_cast<Index>(nu))) : Matrix(0, model.size());
    const Matrix phi_batch_u = nu > 0 ? phi_u : Matrix(0, model.size());
    const CostTerms cost =
        cost_terms(c.topRows(nl), phi_l, labeled.y, c_u, phi_batch_u, config.lambda, config.norm, &grad_l, &grad_u);
    if (!std::isfinite(cost.total)) abort("non-finite cost");

    HistoryRow row{ep, cost, lr};
    result.history.push_back(row);
    if (observer) observer(row);

    upstream.topRows(nl) = grad_l;
    if (nu > 0) upstream.bottomRows(static_cast<Index>(nu)) = grad_u;
    const NetworkParams grads = backward(model.spec, model.params, tape, upstream);
    prev_params = model.params;
    prev_adam = model.adam;
    adam_step(model.params, grads, model.adam, lr);
    model.epoch = ep + 1;
  }
  return result;
}

PropertyResiduals property_residuals(const DeepAPCEModel& model, const Matrix& x) {
  require(x.rows() >= 2, ErrorKind::InvalidInput, "property residuals need at least 2 samples");
  check_unlabeled(x, model.dim());
  const auto n = static_cast<std::size_t>(x.rows());
  Vector yhat(x.rows());
  Eigen::RowVectorXd csum = Eigen::RowVectorXd::Zero(model.size());
  std::vector<double> c1(n);
  for (Index start = 0; start < x.rows(); start += kPredictBlock) {
    const Index rows = std::min(kPredictBlock, x.rows() - start);
    const Evaluated e = evaluate_rows(model, x.middleRows(start, rows));
    yhat.segment(start, rows) = e.c.cwiseProduct(e.phi).rowwise().sum();
    for (Index i = 0; i < rows; ++i) c1[static_cast<std::size_t>(start + i)] = e.c(i, 0);
    csum += e.c.colwise().sum();
  }
  const double nd = static_cast<double>(n);
  PropertyResiduals r;
  r.mean = blocked_sum(n, [&](std::size_t i) { return yhat(static_cast<Index>(i)); }) / nd;
  r.variance = blocked_sum(n, [&](std::size_t i) {
                 const double d = yhat(static_cast<Index>(i)) - r.mean;
                 return d * d;
               }) /
               (nd - 1.0);
  const double mean_c1 = blocked_sum(c1) / nd;
  double tail = 0.0;
  for (Index i = 1; i < csum.size(); ++i) {
    const double m = csum(i) / nd;
    tail += m * m;
  }
  r.r_mean = std::abs(r.mean - mean_c1);
  r.r_var = std::abs(r.variance - tail);
  return r;
}

Vector predict_classical(const DeepAPCEModel& model, const Vector& coefficients, const Matrix& x) {
  require(coefficients.size() == model.size(), ErrorKind::InvalidInput, "classical coefficient count differs from basis size");
  Vector out(x.rows());
  for (Index start = 0; start < x.rows(); start += kPredictBlock) {
    const Index rows = std::min(kPredictBlock, x.rows() - start);
    out.segment(start, rows) = model.basis.evaluate(model.normalization.apply(Matrix(x.middleRows(start, rows)))) * coefficients;
  }
  return out;
}

Bytes save_model(const DeepAPCEModel& model) {
  model.validate();
  ByteWriter w;
  const UnivariateBasis& uni = model.basis.univariate();
  w.u32(static_cast<std::uint32_t>(model.dim()));
  w.u32(static_cast<std::uint32_t>(model.order()));
  w.u8(uni.mode == BasisMode::Orthonormal ? 1 : 0);
  w.matrix(model.normalization.mean);
  w.matrix(model.normalization.std);
  for (int k = 0; k < uni.dim(); ++k) {
    w.matrix(uni.coefficients[static_cast<std::size_t>(k)]);
    w.matrix(uni.norms[static_cast<std::size_t>(k)]);
  }
  w.u64(static_cast<std::uint64_t>(model.size()));
  for (const auto& tuple : model.basis.indices().indices) {
    for (int s : tuple) w.u8(static_cast<std::uint8_t>(s));
  }
  const Bytes ckp = save_checkpoint({model.spec, model.params, model.adam, model.schedule, model.epoch});
  w.u64(ckp.size());
  w.bytes(ckp);
  return frame_payload(kModelMagic, kModelVersion, w.data());
}

DeepAPCEModel load_model(const Bytes& bytes) {
  const Bytes payload = unframe_payload(kModelMagic, kModelVersion, bytes, "model bundle");
  ByteReader r(payload.data(), payload.size(), "model bundle");
  DeepAPCEModel m;
  const int dim = static_cast<int>(r.u32());
  const int order = static_cast<int>(r.u32());
  require(dim >= 1 && order >= 0 && order <= 64, ErrorKind::BadFormat, "model bundle: implausible dimension or order");
  UnivariateBasis uni;
  uni.order = order;
  uni.mode = r.u8() == 1 ? BasisMode::Orthonormal : BasisMode::Monic;
  m.normalization.mean = r.matrix();
  m.normalization.std = r.matrix();
  require(m.normalization.mean.size() == dim && m.normalization.std.size() == dim, ErrorKind::BadFormat,
          "model bundle: normalization block has the wrong size");
  for (int k = 0; k < dim; ++k) {
    Matrix c = r.matrix();
    Matrix nrm = r.matrix();
    require(c.rows() == order + 1 && c.cols() == order + 1 && nrm.size() == order + 1, ErrorKind::BadFormat,
            "model bundle: basis coefficient block has the wrong shape");
    uni.coefficients.push_back(std::move(c));
    uni.norms.push_back(Vector(nrm.reshaped()));
  }
  MultiIndexSet set;
  set.dim = dim;
  set.order = order;
  const std::uint64_t count = r.u64();
  require(count == total_degree_count(dim, order), ErrorKind::BadFormat, "model bundle: index set has the wrong size");
  for (std::uint64_t i = 0; i < count; ++i) {
    MultiIndex tuple(static_cast<std::size_t>(dim));
    int sum = 0;
    for (int k = 0; k < dim; ++k) {
      tuple[static_cast<std::size_t>(k)] = r.u8();
      sum += tuple[static_cast<std::size_t>(k)];
    }
    require(sum <= order, ErrorKind::BadFormat, "model bundle: index tuple exceeds the total order");
    set.indices.push_back(std::move(tuple));
  }
  m.basis = MultiDimBasis(std::move(uni), std::move(set));
  const std::uint64_t ckp_size = r.u64();
  require(ckp_size <= r.remaining(), ErrorKind::Truncated, "model bundle: embedded checkpoint is truncated");
  const std::string raw = r.raw(static_cast<std::size_t>(ckp_size));
  Checkpoint c = load_checkpoint(Bytes(raw.begin(), raw.end()));
  require(r.remaining() == 0, ErrorKind::BadFormat, "model bundle: unexpected trailing bytes");
  m.spec = std::move(c.spec);
  m.params = std::move(c.params);
  m.adam = std::move(c.adam);
  m.schedule = c.schedule;
  m.epoch = c.epoch;
  m.validate();
  return m;
}

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& history) {
  out << "epoch,J,L_gd,L_ce1,L_ce2M,learning_rate\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << format_double(h.cost.total) << ',' << format_double(h.cost.gd) << ','
        << format_double(h.cost.ce1) << ',' << format_double(h.cost.ce2m) << ',' << format_double(h.learning_rate)
        << '\n';
  }
}

}  // namespace dapce

#pragma once

// Adaptive aPC surrogate: a network maps normalized inputs to expansion
// coefficients that multiply a fixed orthonormal moment basis.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dapce/errors.hpp"
#include "dapce/neural.hpp"
#include "dapce/polychaos.hpp"

namespace dapce {

enum class LossNorm { L1, L2 };

std::string to_string(LossNorm n);
LossNorm loss_norm_from_string(const std::string& name);

struct LabeledSet {
  Matrix x;  // original units, n x d
  Vector y;  // raw response values

  Index size() const { return x.rows(); }
  void validate(int dim) const;
};

struct TrainingConfig {
  double lambda = 1.0;
  std::int64_t epochs = 1000;
  LRSchedule schedule;
  LossNorm norm = LossNorm::L1;
  /// Unlabeled rows drawn (without replacement) per epoch; 0 or >= pool size uses the full pool.
  Index unlabeled_batch = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CostTerms {
  double gd = 0.0;
  double ce1 = 0.0;
  double ce2m = 0.0;
  double total = 0.0;
};

struct HistoryRow {
  std::int64_t epoch = 0;
  CostTerms cost;
  double learning_rate = 0.0;
};

struct PropertyResiduals {
  double r_mean = 0.0;
  double r_var = 0.0;
  double mean = 0.0;      // E[yhat]
  double variance = 0.0;  // D[yhat], n-1 divisor
};

class DeepAPCEModel {
 public:
  NormalizationParams normalization;
  MultiDimBasis basis;
  NetworkSpec spec;
  NetworkParams params;
  // Optimizer state after the most recent training run.
  AdamState adam;
  LRSchedule schedule;
  std::int64_t epoch = 0;

  int dim() const { return basis.dim(); }
  int order() const { return basis.order(); }
  Index size() const { return basis.size(); }

  /// Raw network output C(xi) for normalized inputs.
  Vector coefficients(const Vector& xi) const;
  Matrix coefficients(const Matrix& xi) const;

  /// Normalizes x, then returns dot(C(xi), Phi(xi)).
  double predict(const Vector& x) const;
  /// Row-wise predictions; rows are split into fixed blocks, so results do not depend on `threads`.
  Vector predict(const Matrix& x, int threads = 1) const;
  Vector predict_normalized(const Matrix& xi) const;

  void validate() const;
};

/// Builds the surrogate: normalization and basis moments come from `pool`
/// (original units), the basis is orthonormal and the network emits M values.
DeepAPCEModel make_model(const Matrix& pool, int order, const std::vector<int>& hidden,
                         Activation activation = Activation::Relu, std::uint64_t seed = 0);

/// Cost terms from coefficient and basis matrices (rows = samples). When the
/// gradient pointers are non-null they receive dJ/dC for each set.
CostTerms cost_terms(const Matrix& c_labeled, const Matrix& phi_labeled, const Vector& y, const Matrix& c_unlabeled,
                     const Matrix& phi_unlabeled, double lambda, LossNorm norm, Matrix* grad_labeled = nullptr,
                     Matrix* grad_unlabeled = nullptr);

double loss_gd(const DeepAPCEModel& model, const LabeledSet& labeled, LossNorm norm = LossNorm::L1);
double loss_ce1(const DeepAPCEModel& model, const Matrix& unlabeled_x);
double loss_ce2m(const DeepAPCEModel& model, const Matrix& unlabeled_x);
CostTerms total_cost(const DeepAPCEModel& model, const LabeledSet& labeled, const Matrix& unlabeled_x, double lambda,
                     LossNorm norm = LossNorm::L1);

/// Raised when the cost becomes non-finite; carries the state of the last finite epoch.
class TrainingAborted : public Error {
 public:
  TrainingAborted(const std::string& message, Checkpoint last_good)
      : Error(ErrorKind::NumericFailure, message), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

struct TrainingResult {
  std::vector<HistoryRow> history;
};

using EpochObserver = std::function<void(const HistoryRow&)>;

/// One Adam step per epoch on the full labeled set plus an unlabeled sub-batch.
/// Deterministic given config.seed. The model's optimizer state is reset.
TrainingResult train(DeepAPCEModel& model, const LabeledSet& labeled, const Matrix& unlabeled_x,
                     const TrainingConfig& config, const EpochObserver& observer = {});

PropertyResiduals property_residuals(const DeepAPCEModel& model, const Matrix& x);

/// Frozen-coefficient predictions of a classical aPC fit on the model's basis.
Vector predict_classical(const DeepAPCEModel& model, const Vector& coefficients, const Matrix& x);

inline constexpr std::uint32_t kModelVersion = 1;

Bytes save_model(const DeepAPCEModel& model);
DeepAPCEModel load_model(const Bytes& bytes);

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& history);

}  // namespace dapce

#pragma once

// Dense feed-forward network with hand-written reverse mode, Adam and a
// step-decay learning-rate schedule.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dapce/bytes.hpp"

namespace dapce {

enum class Activation { Relu, Gelu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct NetworkSpec {
  int input = 1;
  std::vector<int> hidden;
  int output = 1;
  Activation activation = Activation::Relu;
  std::uint64_t seed = 0;

  /// input, hidden..., output.
  std::vector<int> widths() const;
  std::size_t layer_count() const { return hidden.size() + 1; }
  void validate() const;
};

/// Affine layer z = h W + b with W of shape fan_in x fan_out and b a row vector.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::RowVectorXd bias;
};

/// Parameters (and, with the same shape, gradients and Adam accumulators).
struct NetworkParams {
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  /// Zero-filled copy with identical shapes.
  NetworkParams zeros_like() const;
  /// Shape check against `spec`; entries must be finite.
  void validate(const NetworkSpec& spec) const;
  bool all_finite() const;
  /// Flat view helpers for tests and diagnostics: layer weights (column-major) then bias.
  double& at(std::size_t flat_index);
  double at(std::size_t flat_index) const;
};

/// Weights ~ U(-sqrt(3/fan_in), sqrt(3/fan_in)) from Rng(spec.seed), so std 1/sqrt(fan_in); biases zero.
NetworkParams init_params(const NetworkSpec& spec);

double gelu(double x);
double gelu_derivative(double x);

/// Activations recorded during a batch forward pass for reverse mode.
struct ForwardTape {
  std::vector<Eigen::MatrixXd> inputs;    // input of layer l (batch x fan_in)
  std::vector<Eigen::MatrixXd> preacts;   // pre-activation of hidden layer l
  Eigen::Index batch = 0;
  std::uint64_t params_tag = 0;           // shape fingerprint of the params used
};

/// Batch forward: rows of `x` are inputs. Throws NumericOverflow with the layer
/// index when an intermediate value is non-finite.
Eigen::MatrixXd forward(const NetworkSpec& spec, const NetworkParams& params, const Eigen::MatrixXd& x,
                        ForwardTape* tape = nullptr);
Eigen::VectorXd forward(const NetworkSpec& spec, const NetworkParams& params, const Eigen::VectorXd& x);

/// Reverse-mode gradient of sum(upstream .* output) with respect to all parameters.
/// Throws InvalidState if the tape does not belong to this network and batch.
NetworkParams backward(const NetworkSpec& spec, const NetworkParams& params, const ForwardTape& tape,
                       const Eigen::MatrixXd& upstream);

struct AdamState {
  NetworkParams m;
  NetworkParams v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const NetworkParams& params);

/// One bias-corrected Adam update of `params` in place.
void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state, double learning_rate);

struct LRSchedule {
  double initial = 0.01;
  double decay = 1.0;
  int interval = 1;

  void validate() const;
  /// initial * decay^floor(epoch / interval).
  double rate(std::int64_t epoch) const;
};

struct Checkpoint {
  NetworkSpec spec;
  NetworkParams params;
  AdamState adam;
  LRSchedule schedule;
  std::int64_t epoch = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

Bytes save_checkpoint(const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const Bytes& bytes);

// Unframed encoders reused by the model bundle.
void write_spec(ByteWriter& w, const NetworkSpec& spec);
NetworkSpec read_spec(ByteReader& r);
void write_params(ByteWriter& w, const NetworkParams& params);
NetworkParams read_params(ByteReader& r, const NetworkSpec& spec);

}  // namespace dapce

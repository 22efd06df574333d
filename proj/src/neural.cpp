#include "dapce/neural.hpp"

#include <cmath>
#include <numbers>

#include "dapce/errors.hpp"
#include "dapce/random.hpp"

namespace dapce {

namespace {

using Eigen::MatrixXd;

std::uint64_t shape_tag(const NetworkParams& params) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& layer : params.layers) {
    const std::uint64_t dims[2] = {static_cast<std::uint64_t>(layer.weights.rows()),
                                   static_cast<std::uint64_t>(layer.weights.cols())};
    h = fnv1a64(reinterpret_cast<const std::uint8_t*>(dims), sizeof dims, h);
  }
  return h;
}

void apply_activation(Activation a, const MatrixXd& z, MatrixXd& h) {
  if (a == Activation::Relu) {
    h = z.cwiseMax(0.0);
  } else {
    h = z.unaryExpr([](double v) { return gelu(v); });
  }
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "gelu"; }

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "gelu") return Activation::Gelu;
  fail(ErrorKind::Config, "unknown activation '" + name + "' (expected relu or gelu)");
}

std::vector<int> NetworkSpec::widths() const {
  std::vector<int> w;
  w.push_back(input);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(output);
  return w;
}

void NetworkSpec::validate() const {
  for (int w : widths()) {
    require(w >= 1, ErrorKind::InvalidInput, "network widths must all be at least 1");
  }
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

NetworkParams NetworkParams::zeros_like() const {
  NetworkParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    z.layers.push_back({MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::RowVectorXd::Zero(l.bias.size())});
  }
  return z;
}

void NetworkParams::validate(const NetworkSpec& spec) const {
  const auto w = spec.widths();
  require(layers.size() == spec.layer_count(), ErrorKind::InvalidModel,
          "parameter layer count does not match the network spec");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require(layers[l].weights.rows() == w[l] && layers[l].weights.cols() == w[l + 1] &&
                layers[l].bias.size() == w[l + 1],
            ErrorKind::InvalidModel, "layer " + std::to_string(l) + " has the wrong shape");
  }
  require(all_finite(), ErrorKind::InvalidModel, "network parameters contain non-finite values");
}

bool NetworkParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

double& NetworkParams::at(std::size_t flat_index) {
  for (auto& l : layers) {
    const auto nw = static_cast<std::size_t>(l.weights.size());
    if (flat_index < nw) return l.weights.data()[flat_index];
    flat_index -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (flat_index < nb) return l.bias.data()[flat_index];
    flat_index -= nb;
  }
  fail(ErrorKind::InvalidInput, "parameter index out of range");
}

double NetworkParams::at(std::size_t flat_index) const {
  return const_cast<NetworkParams*>(this)->at(flat_index);
}

NetworkParams init_params(const NetworkSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto w = spec.widths();
  NetworkParams p;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    DenseLayer layer;
    layer.weights.resize(w[l], w[l + 1]);
    layer.bias.resize(w[l + 1]);
    // Uniform on [-a, a] with a = sqrt(3 / fan_in) has standard deviation 1 / sqrt(fan_in).
    const double bound = std::sqrt(3.0 / static_cast<double>(w[l]));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
    layer.bias.setZero();
    p.layers.push_back(std::move(layer));
  }
  return p;
}

double gelu(double x) { return 0.5 * x * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

MatrixXd forward(const NetworkSpec& spec, const NetworkParams& params, const MatrixXd& x, ForwardTape* tape) {
  require(x.cols() == spec.input, ErrorKind::InvalidInput,
          "network input has " + std::to_string(x.cols()) + " columns, expected " + std::to_string(spec.input));
  require(params.layers.size() == spec.layer_count(), ErrorKind::InvalidModel,
          "parameters do not match the network spec");
  require(x.allFinite(), ErrorKind::NonFiniteInput, "network input contains non-finite values");
  if (tape) {
    tape->inputs.clear();
    tape->preacts.clear();
    tape->batch = x.rows();
    tape->params_tag = shape_tag(params);
  }
  MatrixXd h = x;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    const DenseLayer& layer = params.layers[l];
    MatrixXd z = h * layer.weights;
    z.rowwise() += layer.bias;
    if (!z.allFinite()) {
      fail(ErrorKind::NumericOverflow, "non-finite activation in layer " + std::to_string(l));
    }
    if (tape) tape->inputs.push_back(std::move(h));
    if (l == last) return z;
    apply_activation(spec.activation, z, h);
    if (tape) tape->preacts.push_back(std::move(z));
  }
  return h;
}

Eigen::VectorXd forward(const NetworkSpec& spec, const NetworkParams& params, const Eigen::VectorXd& x) {
  const MatrixXd out = forward(spec, params, MatrixXd(x.transpose()));
  return out.row(0).transpose();
}

NetworkParams backward(const NetworkSpec& spec, const NetworkParams& params, const ForwardTape& tape,
                       const MatrixXd& upstream) {
  const std::size_t layers = params.layers.size();
  const bool consistent = layers == spec.layer_count() && tape.inputs.size() == layers &&
                          tape.preacts.size() + 1 == layers && tape.params_tag == shape_tag(params) &&
                          upstream.rows() == tape.batch && upstream.cols() == spec.output;
  if (!consistent) {
    fail(ErrorKind::InvalidState, "forward tape does not match this network, batch or cotangent shape");
  }
  NetworkParams grads;
  grads.layers.resize(layers);
  MatrixXd delta = upstream;
  for (std::size_t l = layers; l-- > 0;) {
    const MatrixXd& input = tape.inputs[l];
    grads.layers[l].weights.noalias() = input.transpose() * delta;
    grads.layers[l].bias = delta.colwise().sum();
    if (l == 0) break;
    MatrixXd back = delta * params.layers[l].weights.transpose();
    const MatrixXd& z = tape.preacts[l - 1];
    if (spec.activation == Activation::Relu) {
      delta = (z.array() > 0.0).select(back, 0.0);
    } else {
      delta = back.cwiseProduct(z.unaryExpr([](double v) { return gelu_derivative(v); }));
    }
  }
  return grads;
}

AdamState make_adam_state(const NetworkParams& params) {
  AdamState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state, double learning_rate) {
  require(grads.layers.size() == params.layers.size() && state.m.layers.size() == params.layers.size(),
          ErrorKind::InvalidState, "Adam: parameter, gradient and state shapes differ");
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double eps = state.epsilon;
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    require(p.size() == g.size() && p.size() == m.size(), ErrorKind::InvalidState, "Adam: shape mismatch");
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
    const auto mhat = m.array() / c1;
    const auto vhat = v.array() / c2;
    p.array() -= learning_rate * mhat / (vhat.sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights, grads.layers[l].weights, state.m.layers[l].weights,
           state.v.layers[l].weights);
    update(params.layers[l].bias, grads.layers[l].bias, state.m.layers[l].bias, state.v.layers[l].bias);
  }
}

void LRSchedule::validate() const {
  require(initial > 0.0 && std::isfinite(initial), ErrorKind::InvalidInput, "learning rate must be positive");
  require(decay > 0.0 && decay <= 1.0, ErrorKind::InvalidInput, "decay factor must be in (0, 1]");
  require(interval >= 1, ErrorKind::InvalidInput, "decay interval must be at least 1 epoch");
}

double LRSchedule::rate(std::int64_t epoch) const {
  return initial * std::pow(decay, static_cast<double>(epoch / interval));
}

void write_spec(ByteWriter& w, const NetworkSpec& spec) {
  w.u32(static_cast<std::uint32_t>(spec.input));
  w.u32(static_cast<std::uint32_t>(spec.hidden.size()));
  for (int h : spec.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.u32(static_cast<std::uint32_t>(spec.output));
  w.u8(spec.activation == Activation::Relu ? 0 : 1);
  w.u64(spec.seed);
}

NetworkSpec read_spec(ByteReader& r) {
  NetworkSpec s;
  s.input = static_cast<int>(r.u32());
  const std::uint32_t nh = r.u32();
  require(nh <= 1024, ErrorKind::BadFormat, "network spec lists an implausible number of layers");
  for (std::uint32_t i = 0; i < nh; ++i) s.hidden.push_back(static_cast<int>(r.u32()));
  s.output = static_cast<int>(r.u32());
  const std::uint8_t act = r.u8();
  require(act <= 1, ErrorKind::BadFormat, "unknown activation code in network spec");
  s.activation = act == 0 ? Activation::Relu : Activation::Gelu;
  s.seed = r.u64();
  s.validate();
  return s;
}

void write_params(ByteWriter& w, const NetworkParams& params) {
  w.u32(static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    w.matrix(l.weights);
    w.matrix(l.bias);
  }
}

NetworkParams read_params(ByteReader& r, const NetworkSpec& spec) {
  NetworkParams p;
  const std::uint32_t n = r.u32();
  require(n == spec.layer_count(), ErrorKind::BadFormat, "layer count disagrees with network spec");
  for (std::uint32_t i = 0; i < n; ++i) {
    DenseLayer l;
    l.weights = r.matrix();
    const MatrixXd b = r.matrix();
    require(b.rows() == 1, ErrorKind::BadFormat, "bias block must be a row vector");
    l.bias = b.row(0);
    p.layers.push_back(std::move(l));
  }
  const auto w = spec.widths();
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    require(p.layers[l].weights.rows() == w[l] && p.layers[l].weights.cols() == w[l + 1] &&
                p.layers[l].bias.size() == w[l + 1],
            ErrorKind::BadFormat, "layer " + std::to_string(l) + " shape disagrees with network spec");
  }
  return p;
}

namespace {
constexpr std::string_view kCheckpointMagic = "DAPCECKP";
}

Bytes save_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  write_spec(w, c.spec);
  w.f64(c.schedule.initial);
  w.f64(c.schedule.decay);
  w.u32(static_cast<std::uint32_t>(c.schedule.interval));
  w.i64(c.epoch);
  w.i64(c.adam.t);
  w.f64(c.adam.beta1);
  w.f64(c.adam.beta2);
  w.f64(c.adam.epsilon);
  write_params(w, c.params);
  write_params(w, c.adam.m);
  write_params(w, c.adam.v);
  return frame_payload(kCheckpointMagic, kCheckpointVersion, w.data());
}

Checkpoint load_checkpoint(const Bytes& bytes) {
  const Bytes payload = unframe_payload(kCheckpointMagic, kCheckpointVersion, bytes, "checkpoint");
  ByteReader r(payload.data(), payload.size(), "checkpoint");
  Checkpoint c;
  c.spec = read_spec(r);
  c.schedule.initial = r.f64();
  c.schedule.decay = r.f64();
  c.schedule.interval = static_cast<int>(r.u32());
  c.epoch = r.i64();
  c.adam.t = r.i64();
  c.adam.beta1 = r.f64();
  c.adam.beta2 = r.f64();
  c.adam.epsilon = r.f64();
  c.params = read_params(r, c.spec);
  c.adam.m = read_params(r, c.spec);
  c.adam.v = read_params(r, c.spec);
  require(r.remaining() == 0, ErrorKind::BadFormat, "checkpoint: unexpected trailing payload bytes");
  return c;
}

}  // namespace dapce

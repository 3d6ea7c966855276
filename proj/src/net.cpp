#include "cemrl/net.hpp"

#include <cmath>
#include <random>

#include "cemrl/errors.hpp"

namespace cemrl {

std::string size_mismatch(const char* what, long expected, long actual) {
  return std::string(what) + ": expected size " + std::to_string(expected) + ", got " +
         std::to_string(actual);
}

namespace net {

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu" || name == "leaky-relu") return Activation::leaky_relu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
  }
  return "?";
}

void NetSpec::validate() const {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("NetSpec needs at least an input and an output layer");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("NetSpec layer sizes must be positive");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
    throw std::invalid_argument("NetSpec leaky_slope must lie in (0, 1)");
  if (output != Activation::tanh && output != Activation::identity)
    throw std::invalid_argument("NetSpec output nonlinearity must be tanh or identity");
  if (hidden == Activation::identity)
    throw std::invalid_argument("NetSpec hidden nonlinearity must be tanh, relu or leaky_relu");
}

Eigen::Index NetSpec::param_count() const {
  Eigen::Index n = 0;
  for (int l = 0; l < num_layers(); ++l)
    n += static_cast<Eigen::Index>(layer_sizes[l] + 1) * layer_sizes[l + 1];
  return n;
}

Eigen::Index NetSpec::weight_offset(int layer) const {
  Eigen::Index n = 0;
  for (int l = 0; l < layer; ++l)
    n += static_cast<Eigen::Index>(layer_sizes[l] + 1) * layer_sizes[l + 1];
  return n;
}

Eigen::Index NetSpec::bias_offset(int layer) const {
  return weight_offset(layer) +
         static_cast<Eigen::Index>(layer_sizes[layer]) * layer_sizes[layer + 1];
}

NetSpec actor_spec(int obs_dim, int action_dim, std::vector<int> hidden,
                   Activation nonlinearity) {
  NetSpec spec;
  spec.layer_sizes.push_back(obs_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(action_dim);
  spec.hidden = nonlinearity;
  spec.output = Activation::tanh;
  spec.validate();
  return spec;
}

NetSpec critic_spec(int obs_dim, int action_dim, std::vector<int> hidden) {
  NetSpec spec;
  spec.layer_sizes.push_back(obs_dim + action_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(1);
  spec.hidden = Activation::leaky_relu;
  spec.output = Activation::identity;
  spec.validate();
  return spec;
}

NetParams::NetParams(const NetSpec& spec) : NetParams(spec, Vector::Zero(spec.param_count())) {}

NetParams::NetParams(const NetSpec& spec, Vector flat) : spec_(spec), values_(std::move(flat)) {
  spec_.validate();
}

NetParams NetParams::unflatten(const NetSpec& spec, Vector flat) {
  if (flat.size() != spec.param_count())
    throw DimensionError(size_mismatch("NetParams::unflatten", spec.param_count(), flat.size()));
  return NetParams(spec, std::move(flat));
}

Eigen::Map<const Matrix> NetParams::weight(int layer) const {
  return {values_.data() + spec_.weight_offset(layer), spec_.layer_sizes[layer + 1],
          spec_.layer_sizes[layer]};
}

Eigen::Map<const Vector> NetParams::bias(int layer) const {
  return {values_.data() + spec_.bias_offset(layer), spec_.layer_sizes[layer + 1]};
}

Eigen::Map<Matrix> NetParams::weight(int layer) {
  return {values_.data() + spec_.weight_offset(layer), spec_.layer_sizes[layer + 1],
          spec_.layer_sizes[layer]};
}

Eigen::Map<Vector> NetParams::bias(int layer) {
  return {values_.data() + spec_.bias_offset(layer), spec_.layer_sizes[layer + 1]};
}

namespace {

void apply(Activation a, double slope, Matrix& m) {
  switch (a) {
    case Activation::identity: break;
    case Activation::tanh: m = m.array().tanh(); break;
    case Activation::relu: m = m.array().max(0.0); break;
    case Activation::leaky_relu:
      m = (m.array() > 0.0).select(m, slope * m);
      break;
  }
}

// Multiplies `delta` in place by f'(pre), with `post` = f(pre).
void apply_derivative(Activation a, double slope, const Matrix& pre, const Matrix& post,
                      Matrix& delta) {
  switch (a) {
    case Activation::identity: break;
    case Activation::tanh: delta.array() *= 1.0 - post.array().square(); break;
    case Activation::relu: delta = (pre.array() > 0.0).select(delta, 0.0); break;
    case Activation::leaky_relu:
      delta = (pre.array() > 0.0).select(delta, slope * delta);
      break;
  }
}

struct LayerMaps {
  Eigen::Map<const Matrix> w;
  Eigen::Map<const Vector> b;
};

LayerMaps layer(const NetSpec& spec, const ParamsRef& params, int l) {
  return {{params.data() + spec.weight_offset(l), spec.layer_sizes[l + 1], spec.layer_sizes[l]},
          {params.data() + spec.bias_offset(l), spec.layer_sizes[l + 1]}};
}

void check_params(const NetSpec& spec, const ParamsRef& params) {
  if (params.size() != spec.param_count())
    throw DimensionError(size_mismatch("network parameters", spec.param_count(), params.size()));
}

Activation activation_of(const NetSpec& spec, int l) {
  return l + 1 == spec.num_layers() ? spec.output : spec.hidden;
}

}  // namespace

Matrix forward_batch(const NetSpec& spec, ParamsRef params, const Matrix& inputs) {
  check_params(spec, params);
  if (inputs.rows() != spec.input_size())
    throw DimensionError(size_mismatch("network input", spec.input_size(), inputs.rows()));
  Matrix x = inputs;
  for (int l = 0; l < spec.num_layers(); ++l) {
    auto [w, b] = layer(spec, params, l);
    Matrix z = w * x;
    z.colwise() += b;
    apply(activation_of(spec, l), spec.leaky_slope, z);
    x = std::move(z);
  }
  return x;
}

Vector forward(const NetSpec& spec, ParamsRef params, const Vector& input) {
  return forward_batch(spec, params, input);
}

Vector forward(const NetParams& params, const Vector& input) {
  return forward(params.spec(), params.flatten(), input);
}

Tape forward_tape(const NetSpec& spec, ParamsRef params, const Matrix& inputs) {
  check_params(spec, params);
  if (inputs.rows() != spec.input_size())
    throw DimensionError(size_mismatch("network input", spec.input_size(), inputs.rows()));
  Tape tape;
  tape.pre.reserve(spec.num_layers());
  tape.act.reserve(spec.num_layers() + 1);
  tape.act.push_back(inputs);
  for (int l = 0; l < spec.num_layers(); ++l) {
    auto [w, b] = layer(spec, params, l);
    Matrix z = w * tape.act.back();
    z.colwise() += b;
    Matrix a = z;
    apply(activation_of(spec, l), spec.leaky_slope, a);
    tape.pre.push_back(std::move(z));
    tape.act.push_back(std::move(a));
  }
  return tape;
}

Gradients backward_batch(const NetSpec& spec, ParamsRef params, const Tape& tape,
                         const Matrix& upstream_grad) {
  check_params(spec, params);
  const int L = spec.num_layers();
  if (upstream_grad.rows() != spec.output_size() || upstream_grad.cols() != tape.output().cols())
    throw DimensionError(size_mismatch("upstream gradient", spec.output_size(), upstream_grad.rows()));

  Gradients g;
  g.params = Vector::Zero(spec.param_count());
  Matrix delta = upstream_grad;
  for (int l = L - 1; l >= 0; --l) {
    apply_derivative(activation_of(spec, l), spec.leaky_slope, tape.pre[l], tape.act[l + 1], delta);
    const int fan_out = spec.layer_sizes[l + 1];
    const int fan_in = spec.layer_sizes[l];
    Eigen::Map<Matrix> gw(g.params.data() + spec.weight_offset(l), fan_out, fan_in);
    Eigen::Map<Vector> gb(g.params.data() + spec.bias_offset(l), fan_out);
    gw.noalias() = delta * tape.act[l].transpose();
    gb = delta.rowwise().sum();
    auto [w, b] = layer(spec, params, l);
    Matrix prev = w.transpose() * delta;
    delta = std::move(prev);
  }
  g.input = std::move(delta);
  return g;
}

Gradients backward(const NetSpec& spec, ParamsRef params, const Vector& input,
                   const Vector& upstream_grad) {
  if (upstream_grad.size() != spec.output_size())
    throw DimensionError(size_mismatch("upstream gradient", spec.output_size(), upstream_grad.size()));
  Tape tape = forward_tape(spec, params, input);
  return backward_batch(spec, params, tape, upstream_grad);
}

Vector init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  NetParams p(spec);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < spec.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.layer_sizes[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = p.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    auto b = p.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = u(rng);
  }
  return p.flatten();
}

AdamState::AdamState(Eigen::Index size, double lr)
    : m(Vector::Zero(size)), v(Vector::Zero(size)), learning_rate(lr) {}

void adam_step(AdamState& state, Eigen::Ref<Vector> params, const Vector& grad) {
  if (grad.size() != params.size())
    throw DimensionError(size_mismatch("adam gradient", params.size(), grad.size()));
  if (state.m.size() != params.size())
    throw DimensionError(size_mismatch("adam moments", params.size(), state.m.size()));
  if (!grad.allFinite()) throw DivergenceError("adam_step: non-finite gradient");

  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  params.array() -= state.learning_rate * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + state.eps_hat);
}

}  // namespace net
}  // namespace cemrl

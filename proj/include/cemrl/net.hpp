#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cemrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace net {

enum class Activation { identity, tanh, relu, leaky_relu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Shape and nonlinearities of a dense feed-forward network.
///
/// `layer_sizes` lists the widths from input to output, so a network with
/// two hidden layers has four entries. Hidden layers use `hidden`, the last
/// layer uses `output` (tanh or identity).
struct NetSpec {
  std::vector<int> layer_sizes;
  Activation hidden = Activation::tanh;
  Activation output = Activation::tanh;
  double leaky_slope = 0.01;

  void validate() const;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  Eigen::Index param_count() const;

  // Offsets of layer l's weight block and bias block in the flat vector.
  Eigen::Index weight_offset(int layer) const;
  Eigen::Index bias_offset(int layer) const;
};

/// Actor: state -> action in (-1, 1).
NetSpec actor_spec(int obs_dim, int action_dim, std::vector<int> hidden,
                   Activation nonlinearity = Activation::tanh);
/// Critic: [state; action] -> scalar, leaky-relu hidden layers.
NetSpec critic_spec(int obs_dim, int action_dim, std::vector<int> hidden);

/// Parameters of a network as one contiguous vector. Layer l stores its
/// (fan_out x fan_in) weight matrix column-major, followed by its bias.
class NetParams {
 public:
  explicit NetParams(const NetSpec& spec);
  static NetParams unflatten(const NetSpec& spec, Vector flat);

  const Vector& flatten() const { return values_; }
  Vector& values() { return values_; }
  const NetSpec& spec() const { return spec_; }

  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;
  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<Vector> bias(int layer);

 private:
  NetParams(const NetSpec& spec, Vector flat);
  NetSpec spec_;
  Vector values_;
};

using ParamsRef = Eigen::Ref<const Vector>;

/// Intermediate values of a batched forward pass, kept for backprop.
/// Columns are batch elements.
struct Tape {
  std::vector<Matrix> pre;  // pre-activation of layer l
  std::vector<Matrix> act;  // act[0] is the input, act[l + 1] the output of layer l
  const Matrix& output() const { return act.back(); }
};

struct Gradients {
  Vector params;  // summed over the batch
  Matrix input;   // one column per batch element
};

Vector forward(const NetSpec& spec, ParamsRef params, const Vector& input);
Vector forward(const NetParams& params, const Vector& input);
Matrix forward_batch(const NetSpec& spec, ParamsRef params, const Matrix& inputs);
Tape forward_tape(const NetSpec& spec, ParamsRef params, const Matrix& inputs);

/// Gradient of output . upstream_grad with respect to the parameters and
/// the input.
Gradients backward(const NetSpec& spec, ParamsRef params, const Vector& input,
                   const Vector& upstream_grad);
Gradients backward_batch(const NetSpec& spec, ParamsRef params, const Tape& tape,
                         const Matrix& upstream_grad);

/// Uniform in +-1/sqrt(fan_in) for every weight and bias of each layer.
Vector init_params(const NetSpec& spec, std::uint64_t seed);

/// Bias-corrected Adam moments for one parameter vector.
struct AdamState {
  AdamState() = default;
  explicit AdamState(Eigen::Index size, double lr = 1e-3);

  Vector m;
  Vector v;
  std::int64_t t = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

/// One descent step: params -= lr * m_hat / (sqrt(v_hat) + eps_hat).
/// Throws DivergenceError, leaving state and params untouched, when the
/// gradient has a non-finite coordinate.
void adam_step(AdamState& state, Eigen::Ref<Vector> params, const Vector& grad);

}  // namespace net
}  // namespace cemrl

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cemrl/net.hpp"
#include "cemrl/rl.hpp"
#include "cemrl/rng.hpp"

namespace cemrl::envs {

struct EnvSpec {
  std::string name;
  int obs_dim = 1;
  int action_dim = 1;  // actions live in [-1, 1]^action_dim
  int horizon = 1;
  std::string reward;
};

struct StepResult {
  Vector next_state;
  double reward = 0.0;
  bool done = false;          // absorbing terminal, not the horizon
  bool action_clamped = false;
};

/// Episodic environment whose step is a pure function of (state, action).
/// The horizon is enforced by the caller.
class Environment {
 public:
  virtual ~Environment() = default;

  const EnvSpec& spec() const { return spec_; }
  virtual Vector reset(std::uint64_t seed) const = 0;

  /// Clamps the action into [-1, 1] (flagging it) before the dynamics.
  StepResult step(const Vector& state, const Vector& action) const;

 protected:
  explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {}
  virtual StepResult dynamics(const Vector& state, const Vector& action) const = 0;

 private:
  EnvSpec spec_;
};

/// 2-D point mass driven by velocity commands towards a goal.
/// obs = [px, py, gx, gy], pos += 0.05 * action, reward = -|pos - goal|.
class PointMass final : public Environment {
 public:
  struct Layout {
    Eigen::Vector2d start;
    Eigen::Vector2d goal;
  };
  static constexpr double kSpeed = 0.05;

  PointMass();
  /// Every reset returns the given start and goal.
  explicit PointMass(Layout fixed);

  Vector reset(std::uint64_t seed) const override;

 protected:
  StepResult dynamics(const Vector& state, const Vector& action) const override;

 private:
  std::optional<Layout> fixed_;
};

/// Torque-limited pendulum swing-up. obs = [cos th, sin th, th_dot].
/// torque = 2 * action, dt = 0.05, g = 10, unit mass and length,
/// |th_dot| <= 8, reward = -(th^2 + 0.1 th_dot^2 + 0.001 torque^2) with th
/// wrapped to [-pi, pi).
class Pendulum final : public Environment {
 public:
  Pendulum();
  Vector reset(std::uint64_t seed) const override;
  static double wrap_angle(double theta);

 protected:
  StepResult dynamics(const Vector& state, const Vector& action) const override;
};

/// One-dimensional corridor with a deceptive per-step signal.
///
/// obs = [x], x += 0.05 * a. Moving left pays `drift_reward * |a|` per step,
/// moving right costs `right_cost * a`. Reaching x >= goal pays `bonus` and
/// ends the episode. A myopic policy drifts left forever; only a sustained
/// rightward sequence collects the bonus.
class DeceptiveCorridor final : public Environment {
 public:
  struct Params {
    double step = 0.05;
    double drift_reward = 0.1;
    double right_cost = 0.01;
    double bonus = 100.0;
    double goal = 1.0;
    double left_wall = -1.0;
  };

  DeceptiveCorridor();
  explicit DeceptiveCorridor(Params params);
  Vector reset(std::uint64_t seed) const override;
  const Params& params() const { return params_; }

 protected:
  StepResult dynamics(const Vector& state, const Vector& action) const override;

 private:
  Params params_;
};

/// Reward 1 every step, fixed horizon; for testing bookkeeping.
class ConstantReward final : public Environment {
 public:
  explicit ConstantReward(int horizon = 5, int obs_dim = 1, int action_dim = 1);
  Vector reset(std::uint64_t seed) const override;

 protected:
  StepResult dynamics(const Vector& state, const Vector& action) const override;
};

std::unique_ptr<Environment> make_env(const std::string& name);
bool is_episodic(const std::string& name);

/// Direct fitness function for CEM-only runs, maximization convention.
struct BlackBoxProblem {
  std::string name;
  int dim = 1;
  std::function<double(const Vector&)> fitness;
};

/// f(x) = -|x|^2
BlackBoxProblem sphere(int dim);
/// f(x) = -(10 d + sum(x_i^2 - 10 cos(2 pi x_i)))
BlackBoxProblem rastrigin(int dim);
BlackBoxProblem make_problem(const std::string& name, int dim);

struct EvalResult {
  double mean_fitness = 0.0;
  std::vector<double> returns;  // one per episode
  long env_steps = 0;
  std::vector<rl::Transition> transitions;
  long clamped_actions = 0;
};

/// Rolls out the actor `genome` for n_episodes, each reset from a seed drawn
/// from rng. Gaussian action noise (std action_noise_std) is added before
/// clamping to [-1, 1]. Episodes end at the horizon (done = false) or at an
/// absorbing terminal (done = true).
EvalResult evaluate(const net::NetSpec& actor, net::ParamsRef genome, const Environment& env,
                    int n_episodes, Rng& rng, double action_noise_std = 0.0,
                    bool keep_transitions = true);

}  // namespace cemrl::envs

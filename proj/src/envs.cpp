#include "cemrl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cemrl/errors.hpp"

namespace cemrl::envs {

StepResult Environment::step(const Vector& state, const Vector& action) const {
  if (state.size() != spec_.obs_dim)
    throw DimensionError(size_mismatch("env state", spec_.obs_dim, state.size()));
  if (action.size() != spec_.action_dim)
    throw DimensionError(size_mismatch("env action", spec_.action_dim, action.size()));
  const Vector clamped = action.cwiseMax(-1.0).cwiseMin(1.0);
  StepResult r = dynamics(state, clamped);
  r.action_clamped = (clamped.array() != action.array()).any();
  return r;
}

PointMass::PointMass()
    : Environment({"pointmass", 4, 2, 100, "-distance to goal after the move"}) {}

PointMass::PointMass(Layout fixed) : PointMass() { fixed_ = fixed; }

Vector PointMass::reset(std::uint64_t seed) const {
  Vector s(4);
  if (fixed_) {
    s << fixed_->start, fixed_->goal;
    return s;
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 4; ++i) s[i] = u(rng);
  return s;
}

StepResult PointMass::dynamics(const Vector& state, const Vector& action) const {
  StepResult r;
  r.next_state = state;
  r.next_state.head<2>() += kSpeed * action;
  r.reward = -(r.next_state.head<2>() - r.next_state.tail<2>()).norm();
  return r;
}

namespace {
constexpr double kMaxSpeed = 8.0;
constexpr double kMaxTorque = 2.0;
constexpr double kDt = 0.05;
constexpr double kGravity = 10.0;
}  // namespace

Pendulum::Pendulum()
    : Environment({"pendulum", 3, 1, 200, "-(th^2 + 0.1 th_dot^2 + 0.001 torque^2)"}) {}

double Pendulum::wrap_angle(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  return theta - two_pi * std::floor((theta + std::numbers::pi) / two_pi);
}

Vector Pendulum::reset(std::uint64_t seed) const {
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  const double theta = angle(rng);
  Vector s(3);
  s << std::cos(theta), std::sin(theta), speed(rng);
  return s;
}

StepResult Pendulum::dynamics(const Vector& state, const Vector& action) const {
  const double theta = std::atan2(state[1], state[0]);
  const double theta_dot = state[2];
  const double torque = kMaxTorque * action[0];
  const double wrapped = wrap_angle(theta);

  StepResult r;
  r.reward = -(wrapped * wrapped + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque);
  const double new_dot = std::clamp(
      theta_dot + (1.5 * kGravity * std::sin(theta) + 3.0 * torque) * kDt, -kMaxSpeed, kMaxSpeed);
  const double new_theta = theta + new_dot * kDt;
  r.next_state = Vector(3);
  r.next_state << std::cos(new_theta), std::sin(new_theta), new_dot;
  return r;
}

DeceptiveCorridor::DeceptiveCorridor() : DeceptiveCorridor(Params{}) {}

DeceptiveCorridor::DeceptiveCorridor(Params params)
    : Environment({"deceptive", 1, 1, 100,
                   "+drift per unit leftward action, -cost per unit rightward action, "
                   "terminal bonus at the goal"}),
      params_(params) {}

Vector DeceptiveCorridor::reset(std::uint64_t) const { return Vector::Zero(1); }

StepResult DeceptiveCorridor::dynamics(const Vector& state, const Vector& action) const {
  const double a = action[0];
  StepResult r;
  r.next_state = Vector(1);
  r.next_state[0] = std::max(params_.left_wall, state[0] + params_.step * a);
  r.reward = a < 0.0 ? params_.drift_reward * -a : -params_.right_cost * a;
  if (r.next_state[0] >= params_.goal) {
    r.reward += params_.bonus;
    r.done = true;
  }
  return r;
}

ConstantReward::ConstantReward(int horizon, int obs_dim, int action_dim)
    : Environment({"constant", obs_dim, action_dim, horizon, "1 per step"}) {
  if (horizon < 1) throw std::invalid_argument("ConstantReward: horizon must be >= 1");
}

Vector ConstantReward::reset(std::uint64_t) const { return Vector::Zero(spec().obs_dim); }

StepResult ConstantReward::dynamics(const Vector& state, const Vector&) const {
  return {state, 1.0, false, false};
}

std::unique_ptr<Environment> make_env(const std::string& name) {
  if (name == "pointmass") return std::make_unique<PointMass>();
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "deceptive") return std::make_unique<DeceptiveCorridor>();
  if (name == "constant") return std::make_unique<ConstantReward>();
  throw std::invalid_argument("unknown environment '" + name + "'");
}

bool is_episodic(const std::string& name) { return name != "sphere" && name != "rastrigin"; }

BlackBoxProblem sphere(int dim) {
  return {"sphere", dim, [](const Vector& x) { return -x.squaredNorm(); }};
}

BlackBoxProblem rastrigin(int dim) {
  return {"rastrigin", dim, [](const Vector& x) {
            const double two_pi = 2.0 * std::numbers::pi;
            double s = 10.0 * static_cast<double>(x.size());
            for (Eigen::Index i = 0; i < x.size(); ++i)
              s += x[i] * x[i] - 10.0 * std::cos(two_pi * x[i]);
            return -s;
          }};
}

BlackBoxProblem make_problem(const std::string& name, int dim) {
  if (dim < 1) throw std::invalid_argument("black-box dimension must be >= 1");
  if (name == "sphere") return sphere(dim);
  if (name == "rastrigin") return rastrigin(dim);
  throw std::invalid_argument("unknown black-box problem '" + name + "'");
}

EvalResult evaluate(const net::NetSpec& actor, net::ParamsRef genome, const Environment& env,
                    int n_episodes, Rng& rng, double action_noise_std, bool keep_transitions) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
  if (genome.size() != actor.param_count())
    throw DimensionError(size_mismatch("evaluate genome", actor.param_count(), genome.size()));
  const auto& spec = env.spec();
  if (actor.input_size() != spec.obs_dim || actor.output_size() != spec.action_dim)
    throw DimensionError("evaluate: actor shape does not match environment " + spec.name);

  EvalResult out;
  std::normal_distribution<double> noise(0.0, action_noise_std > 0.0 ? action_noise_std : 1.0);
  for (int ep = 0; ep < n_episodes; ++ep) {
    Vector state = env.reset(rng());
    double ret = 0.0;
    for (int t = 0; t < spec.horizon; ++t) {
      Vector action = net::forward(actor, genome, state);
      if (action_noise_std > 0.0) {
        for (Eigen::Index i = 0; i < action.size(); ++i) action[i] += noise(rng);
        action = action.cwiseMax(-1.0).cwiseMin(1.0);
      }
      StepResult r = env.step(state, action);
      if (!r.next_state.allFinite() || !std::isfinite(r.reward))
        throw DivergenceError("environment " + spec.name + " produced a non-finite state");
      if (r.action_clamped) ++out.clamped_actions;
      ret += r.reward;
      ++out.env_steps;
      if (keep_transitions)
        out.transitions.push_back({state, action, r.reward, r.next_state, r.done});
      state = std::move(r.next_state);
      if (r.done) break;
    }
    out.returns.push_back(ret);
  }
  double sum = 0.0;
  for (double r : out.returns) sum += r;
  out.mean_fitness = sum / n_episodes;
  return out;
}

}  // namespace cemrl::envs

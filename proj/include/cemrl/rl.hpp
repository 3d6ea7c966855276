#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cemrl/net.hpp"
#include "cemrl/rng.hpp"

namespace cemrl::rl {

struct Transition {
  Vector state;
  Vector action;
  double reward = 0.0;
  Vector next_state;
  bool done = false;  // genuine terminal only, never horizon truncation
};

/// Column-per-sample view of a mini-batch.
struct Batch {
  Matrix states;
  Matrix actions;
  Vector rewards;
  Matrix next_states;
  Vector dones;  // 1.0 for terminal transitions
  Eigen::Index size() const { return states.cols(); }
};

/// Cyclic experience storage; once full, each push overwrites the oldest.
class ReplayBuffer {
 public:
  ReplayBuffer(int obs_dim, int action_dim, std::size_t capacity = 1'000'000);

  void push(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }
  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }

  /// i-th oldest stored transition.
  Transition at(std::size_t i) const;

  /// Uniform with replacement over the current contents.
  Batch sample(int batch_size, Rng& rng) const;

 private:
  Transition slot(std::size_t s) const;
  std::size_t row_width() const { return 2 * obs_dim_ + action_dim_ + 2; }

  int obs_dim_;
  int action_dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<double> rows_;  // grows to capacity rows
};

enum class CriticKind { ddpg, td3 };

struct LearnerConfig {
  CriticKind kind = CriticKind::td3;
  double gamma = 0.99;
  double tau = 5e-3;
  int batch_size = 100;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  // TD3 extras; ignored for ddpg
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  int policy_delay = 2;

  bool twin() const { return kind == CriticKind::td3; }
  int delay() const { return twin() ? policy_delay : 1; }
};

/// Critic networks, their targets and optimizer state. Shared by every
/// actor that learns from it.
struct LearnerState {
  LearnerConfig config;
  net::NetSpec actor_spec;
  net::NetSpec critic_spec;
  Vector q1, q2;
  Vector q1_target, q2_target;
  net::AdamState q1_adam, q2_adam;

  /// Critics from init_params(seed), targets as exact copies.
  static LearnerState create(const net::NetSpec& actor, const net::NetSpec& critic,
                             const LearnerConfig& config, std::uint64_t seed);
};

/// An actor being trained against the critic, with its own target copy.
struct ActorLearner {
  Vector params;
  Vector target;
  net::AdamState adam;

  /// Target copied from params; fresh Adam moments.
  static ActorLearner from(Vector params, double lr);
};

/// Target-policy actions at next states. TD3 adds clipped Gaussian noise and
/// clamps to [-1, 1]; DDPG uses the target actor's output unchanged.
Matrix target_actions(const LearnerState& learner, const Matrix& next_states,
                      net::ParamsRef actor_target, Rng& rng);

/// r + gamma * (1 - done) * Q_t(s', a'), with min over both target critics
/// for TD3.
Vector targets_from_actions(const LearnerState& learner, const Batch& batch,
                            const Matrix& next_actions);

Vector critic_target(const LearnerState& learner, const Batch& batch,
                     net::ParamsRef actor_target, Rng& rng);

/// Mean squared error of one critic against fixed targets.
double critic_loss(const net::NetSpec& critic, net::ParamsRef params, const Batch& batch,
                   const Vector& targets);

/// One Adam step per live critic on the MSE to the detached targets.
/// Returns the summed pre-step loss. Targets networks are left untouched.
double critic_update(LearnerState& learner, const Batch& batch, net::ParamsRef actor_target,
                     Rng& rng);

/// mean over the batch of Q1(s, pi(s)).
double actor_objective(const LearnerState& learner, net::ParamsRef actor, const Batch& batch);
Vector actor_objective_gradient(const LearnerState& learner, net::ParamsRef actor,
                                const Batch& batch);

/// One Adam ascent step on actor_objective. Only the actor changes.
void actor_update(const LearnerState& learner, ActorLearner& actor, const Batch& batch);

/// target <- tau * live + (1 - tau) * target
void soft_update(Eigen::Ref<Vector> target, const Vector& live, double tau);
void soft_update_critics(LearnerState& learner);

struct PhaseStats {
  long critic_batches = 0;
  long actor_batches = 0;
  double last_critic_loss = 0.0;
};

/// Trains the shared critic for `critic_batches` mini-batches using the
/// actor's target for bootstrap actions, then the actor for `actor_batches`.
/// Critic targets follow every policy_delay-th critic step (every step for
/// DDPG); the actor target follows every actor step. The delay counter
/// starts afresh on each call.
PhaseStats gradient_phase(LearnerState& learner, ActorLearner& actor, const ReplayBuffer& buffer,
                          long critic_batches, long actor_batches, Rng& rng);

/// Classic interleaved TD3/DDPG training burst: `iterations` critic steps,
/// with an actor step and all soft updates every policy_delay-th one.
PhaseStats interleaved_training(LearnerState& learner, ActorLearner& actor,
                                const ReplayBuffer& buffer, long iterations, Rng& rng);

}  // namespace cemrl::rl

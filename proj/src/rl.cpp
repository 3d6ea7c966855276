#include "cemrl/rl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cemrl/errors.hpp"

namespace cemrl::rl {

ReplayBuffer::ReplayBuffer(int obs_dim, int action_dim, std::size_t capacity)
    : obs_dim_(obs_dim), action_dim_(action_dim), capacity_(capacity) {
  if (obs_dim < 1 || action_dim < 1) throw std::invalid_argument("ReplayBuffer: dims must be >= 1");
  if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push(const Transition& t) {
  if (t.state.size() != obs_dim_ || t.next_state.size() != obs_dim_)
    throw DimensionError(size_mismatch("transition state", obs_dim_, t.state.size()));
  if (t.action.size() != action_dim_)
    throw DimensionError(size_mismatch("transition action", action_dim_, t.action.size()));
  const std::size_t w = row_width();
  if (size_ < capacity_ && rows_.size() < (cursor_ + 1) * w) rows_.resize((cursor_ + 1) * w);
  double* row = rows_.data() + cursor_ * w;
  for (int i = 0; i < obs_dim_; ++i) *row++ = t.state[i];
  for (int i = 0; i < action_dim_; ++i) *row++ = t.action[i];
  *row++ = t.reward;
  for (int i = 0; i < obs_dim_; ++i) *row++ = t.next_state[i];
  *row = t.done ? 1.0 : 0.0;
  cursor_ = (cursor_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

Transition ReplayBuffer::slot(std::size_t s) const {
  const double* row = rows_.data() + s * row_width();
  Transition t;
  t.state = Eigen::Map<const Vector>(row, obs_dim_);
  row += obs_dim_;
  t.action = Eigen::Map<const Vector>(row, action_dim_);
  row += action_dim_;
  t.reward = *row++;
  t.next_state = Eigen::Map<const Vector>(row, obs_dim_);
  row += obs_dim_;
  t.done = *row != 0.0;
  return t;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::at");
  const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
  return slot((oldest + i) % capacity_);
}

Batch ReplayBuffer::sample(int batch_size, Rng& rng) const {
  if (empty()) throw std::invalid_argument("ReplayBuffer::sample: buffer is empty");
  if (batch_size < 1) throw std::invalid_argument("ReplayBuffer::sample: batch_size must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  Batch b;
  b.states.resize(obs_dim_, batch_size);
  b.actions.resize(action_dim_, batch_size);
  b.rewards.resize(batch_size);
  b.next_states.resize(obs_dim_, batch_size);
  b.dones.resize(batch_size);
  const std::size_t w = row_width();
  for (int k = 0; k < batch_size; ++k) {
    const double* row = rows_.data() + pick(rng) * w;
    b.states.col(k) = Eigen::Map<const Vector>(row, obs_dim_);
    row += obs_dim_;
    b.actions.col(k) = Eigen::Map<const Vector>(row, action_dim_);
    row += action_dim_;
    b.rewards[k] = *row++;
    b.next_states.col(k) = Eigen::Map<const Vector>(row, obs_dim_);
    row += obs_dim_;
    b.dones[k] = *row;
  }
  return b;
}

LearnerState LearnerState::create(const net::NetSpec& actor, const net::NetSpec& critic,
                                  const LearnerConfig& config, std::uint64_t seed) {
  if (critic.input_size() != actor.input_size() + actor.output_size() || critic.output_size() != 1)
    throw DimensionError("critic must map [state; action] to a scalar");
  LearnerState s;
  s.config = config;
  s.actor_spec = actor;
  s.critic_spec = critic;
  s.q1 = net::init_params(critic, splitmix64(seed ^ 0x51));
  s.q2 = net::init_params(critic, splitmix64(seed ^ 0x52));
  s.q1_target = s.q1;
  s.q2_target = s.q2;
  s.q1_adam = net::AdamState(critic.param_count(), config.critic_lr);
  s.q2_adam = net::AdamState(critic.param_count(), config.critic_lr);
  return s;
}

ActorLearner ActorLearner::from(Vector params, double lr) {
  ActorLearner a;
  a.adam = net::AdamState(params.size(), lr);
  a.target = params;
  a.params = std::move(params);
  return a;
}

namespace {

Matrix stack(const Matrix& states, const Matrix& actions) {
  Matrix x(states.rows() + actions.rows(), states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

}  // namespace

Matrix target_actions(const LearnerState& learner, const Matrix& next_states,
                      net::ParamsRef actor_target, Rng& rng) {
  Matrix a = net::forward_batch(learner.actor_spec, actor_target, next_states);
  const auto& c = learner.config;
  if (!c.twin() || c.policy_noise <= 0.0) return a;
  std::normal_distribution<double> normal(0.0, c.policy_noise);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double noise = std::clamp(normal(rng), -c.noise_clip, c.noise_clip);
      a(i, j) = std::clamp(a(i, j) + noise, -1.0, 1.0);
    }
  return a;
}

Vector targets_from_actions(const LearnerState& learner, const Batch& batch,
                            const Matrix& next_actions) {
  const Matrix x = stack(batch.next_states, next_actions);
  Vector q = net::forward_batch(learner.critic_spec, learner.q1_target, x).row(0).transpose();
  if (learner.config.twin()) {
    const Vector q2 = net::forward_batch(learner.critic_spec, learner.q2_target, x).row(0).transpose();
    q = q.cwiseMin(q2);
  }
  return batch.rewards.array() +
         learner.config.gamma * (1.0 - batch.dones.array()) * q.array();
}

Vector critic_target(const LearnerState& learner, const Batch& batch,
                     net::ParamsRef actor_target, Rng& rng) {
  if (batch.size() == 0) throw std::invalid_argument("critic_target: empty batch");
  return targets_from_actions(learner, batch,
                              target_actions(learner, batch.next_states, actor_target, rng));
}

double critic_loss(const net::NetSpec& critic, net::ParamsRef params, const Batch& batch,
                   const Vector& targets) {
  const Vector q =
      net::forward_batch(critic, params, stack(batch.states, batch.actions)).row(0).transpose();
  return (q - targets).squaredNorm() / static_cast<double>(batch.size());
}

namespace {

double regress(const net::NetSpec& critic, Vector& params, net::AdamState& adam, const Matrix& x,
               const Vector& targets) {
  const auto n = static_cast<double>(targets.size());
  net::Tape tape = net::forward_tape(critic, params, x);
  const Matrix residual = tape.output() - targets.transpose();
  const double loss = residual.squaredNorm() / n;
  if (!std::isfinite(loss)) throw DivergenceError("critic_update: non-finite loss");
  const Matrix upstream = (2.0 / n) * residual;
  net::adam_step(adam, params, net::backward_batch(critic, params, tape, upstream).params);
  return loss;
}

}  // namespace

double critic_update(LearnerState& learner, const Batch& batch, net::ParamsRef actor_target,
                     Rng& rng) {
  if (batch.size() == 0) throw std::invalid_argument("critic_update: empty batch");
  const Vector y = critic_target(learner, batch, actor_target, rng);
  const Matrix x = stack(batch.states, batch.actions);
  double loss = regress(learner.critic_spec, learner.q1, learner.q1_adam, x, y);
  if (learner.config.twin()) loss += regress(learner.critic_spec, learner.q2, learner.q2_adam, x, y);
  return loss;
}

double actor_objective(const LearnerState& learner, net::ParamsRef actor, const Batch& batch) {
  const Matrix a = net::forward_batch(learner.actor_spec, actor, batch.states);
  return net::forward_batch(learner.critic_spec, learner.q1, stack(batch.states, a)).mean();
}

Vector actor_objective_gradient(const LearnerState& learner, net::ParamsRef actor,
                                const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("actor_update: empty batch");
  const auto obs = batch.states.rows();
  net::Tape actor_tape = net::forward_tape(learner.actor_spec, actor, batch.states);
  const Matrix x = stack(batch.states, actor_tape.output());
  net::Tape critic_tape = net::forward_tape(learner.critic_spec, learner.q1, x);
  const Matrix upstream =
      Matrix::Constant(1, batch.size(), 1.0 / static_cast<double>(batch.size()));
  const net::Gradients dq = net::backward_batch(learner.critic_spec, learner.q1, critic_tape, upstream);
  const Matrix da = dq.input.bottomRows(dq.input.rows() - obs);
  return net::backward_batch(learner.actor_spec, actor, actor_tape, da).params;
}

void actor_update(const LearnerState& learner, ActorLearner& actor, const Batch& batch) {
  const Vector grad = actor_objective_gradient(learner, actor.params, batch);
  net::adam_step(actor.adam, actor.params, -grad);
}

void soft_update(Eigen::Ref<Vector> target, const Vector& live, double tau) {
  if (target.size() != live.size())
    throw DimensionError(size_mismatch("soft_update", live.size(), target.size()));
  target = tau * live + (1.0 - tau) * target;
}

void soft_update_critics(LearnerState& learner) {
  soft_update(learner.q1_target, learner.q1, learner.config.tau);
  if (learner.config.twin()) soft_update(learner.q2_target, learner.q2, learner.config.tau);
}

PhaseStats gradient_phase(LearnerState& learner, ActorLearner& actor, const ReplayBuffer& buffer,
                          long critic_batches, long actor_batches, Rng& rng) {
  PhaseStats stats;
  if (buffer.empty()) return stats;
  const int delay = learner.config.delay();
  for (long k = 1; k <= critic_batches; ++k) {
    const Batch batch = buffer.sample(learner.config.batch_size, rng);
    stats.last_critic_loss = critic_update(learner, batch, actor.target, rng);
    if (k % delay == 0) soft_update_critics(learner);
    ++stats.critic_batches;
  }
  for (long k = 1; k <= actor_batches; ++k) {
    const Batch batch = buffer.sample(learner.config.batch_size, rng);
    actor_update(learner, actor, batch);
    soft_update(actor.target, actor.params, learner.config.tau);
    ++stats.actor_batches;
  }
  return stats;
}

PhaseStats interleaved_training(LearnerState& learner, ActorLearner& actor,
                                const ReplayBuffer& buffer, long iterations, Rng& rng) {
  PhaseStats stats;
  if (buffer.empty()) return stats;
  const int delay = learner.config.delay();
  for (long k = 1; k <= iterations; ++k) {
    const Batch batch = buffer.sample(learner.config.batch_size, rng);
    stats.last_critic_loss = critic_update(learner, batch, actor.target, rng);
    ++stats.critic_batches;
    if (k % delay == 0) {
      actor_update(learner, actor, batch);
      ++stats.actor_batches;
      soft_update_critics(learner);
      soft_update(actor.target, actor.params, learner.config.tau);
    }
  }
  return stats;
}

}  // namespace cemrl::rl

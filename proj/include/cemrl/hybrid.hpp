#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cemrl/cem.hpp"
#include "cemrl/envs.hpp"
#include "cemrl/mixing.hpp"
#include "cemrl/record.hpp"
#include "cemrl/rl.hpp"

namespace cemrl::hybrid {

enum class Algo { cem, ddpg, td3, cem_ddpg, cem_td3, multi_actor_td3 };
enum class BudgetMode { per_text, per_pseudocode };

Algo parse_algo(const std::string& name);
std::string to_string(Algo a);
BudgetMode parse_budget_mode(const std::string& name);
std::string to_string(BudgetMode m);

struct HybridConfig {
  Algo algo = Algo::cem_td3;
  std::string env = "pointmass";
  int pop_size = 10;
  long max_steps = 1'000'000;
  bool importance_mixing = false;
  double action_noise_std = 0.0;
  net::Activation actor_nonlinearity = net::Activation::tanh;
  std::vector<int> actor_hidden{400, 300};
  std::vector<int> critic_hidden{400, 300};

  // CEM
  double sigma_init = 1e-3;
  double sigma_end = 1e-5;
  double tau_cem = 0.95;
  int elite_count = 0;  // 0 means pop_size / 2
  cem::WeightScheme weight_scheme = cem::WeightScheme::log_rank;

  // RL
  rl::LearnerConfig rl;
  std::size_t buffer_capacity = 1'000'000;
  BudgetMode budget_mode = BudgetMode::per_text;
  double gradient_budget_scale = 1.0;  // 0 disables the gradient phase's mini-batches

  // Evaluation and reporting
  int fitness_episodes = 1;
  int report_episodes = 10;
  long report_interval = 5000;

  // TD3/DDPG and multi-actor baselines
  double expl_noise = 0.1;
  long start_steps = 1000;  // uniform random actions before the actor takes over (td3/ddpg)
  int n_actors = 0;         // multi-actor population; 0 means pop_size / 2

  int blackbox_dim = 10;
  double similarity_tol = 1e-6;

  void validate() const;
  int elites() const { return elite_count > 0 ? elite_count : pop_size / 2; }
  int actors() const { return n_actors > 0 ? n_actors : pop_size / 2; }
  bool uses_cem() const;
  bool uses_gradient_half() const;
  rl::CriticKind critic_kind() const;
};

/// Genome-to-fitness mapping: either actor rollouts in an environment or a
/// direct black-box function.
struct Task {
  std::shared_ptr<const envs::Environment> env;
  net::NetSpec actor;
  std::optional<envs::BlackBoxProblem> blackbox;

  Eigen::Index genome_dim() const;
  bool episodic() const { return env != nullptr; }
};

Task make_task(const HybridConfig& config);
Task make_task(const HybridConfig& config, std::shared_ptr<const envs::Environment> env);

struct GenerationStats {
  long critic_batches = 0;  // summed over the learning half
  long actor_batches = 0;
  int reused = 0;
  int gradient_stepped = 0;
  double similarity = 0.0;
};

struct LoopState {
  std::uint64_t seed = 0;
  Task task;
  long total_steps = 0;
  long actor_steps = 0;  // env steps consumed by the previous generation
  int generation = 0;
  cem::SearchDistribution dist;
  mixing::GenerationArchive archive;
  std::optional<rl::LearnerState> learner;
  std::optional<rl::ReplayBuffer> buffer;
  std::vector<cem::Individual> population;  // last evaluated generation
  GenerationStats last;

  /// Mean actor from init_params, Sigma = sigma_init * I, fresh critic and
  /// empty buffer when the algorithm needs them.
  static LoopState create(const HybridConfig& config, std::uint64_t seed);
  static LoopState create(const HybridConfig& config, std::uint64_t seed, Task task);
};

/// Mini-batches per learning actor: (critic, actor).
std::pair<long, long> gradient_budget(long actor_steps, int pop_size, BudgetMode mode);

/// One CEM-RL generation: draw the population (optionally with importance
/// mixing on the non-gradient half), run the gradient phase on the first
/// half, evaluate everything, then refit the distribution on the top half.
void run_generation(LoopState& state, const HybridConfig& config);

/// Mean-actor score over report_episodes, from a dedicated stream. Does not
/// touch total_steps or the buffer.
RunRecord report(const LoopState& state, const HybridConfig& config);

/// Runs until total_steps >= max_steps (testing after each generation or
/// episode) and returns the reporting stream.
std::vector<RunRecord> run_experiment(const HybridConfig& config, std::uint64_t seed);
std::vector<RunRecord> run_experiment(const HybridConfig& config, std::uint64_t seed, Task task);

/// Population of independent actors sharing one critic and one buffer; no
/// selection, no sampling after initialization.
struct MultiActorState {
  std::uint64_t seed = 0;
  Task task;
  std::vector<rl::ActorLearner> actors;
  std::vector<double> last_fitness;
  rl::LearnerState learner;
  rl::ReplayBuffer buffer;
  long total_steps = 0;
  int round = 0;
  long last_critic_batches = 0;

  static MultiActorState create(const HybridConfig& config, std::uint64_t seed, Task task);
};

/// Evaluates every actor (pushing all transitions), then gives each actor
/// its pro-rata gradient phase against the shared critic.
void multi_actor_step(MultiActorState& state, const HybridConfig& config);

}  // namespace cemrl::hybrid

#include "cemrl/hybrid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "cemrl/diagnostics.hpp"
#include "cemrl/errors.hpp"

namespace cemrl::hybrid {

Algo parse_algo(const std::string& name) {
  if (name == "cem") return Algo::cem;
  if (name == "ddpg") return Algo::ddpg;
  if (name == "td3") return Algo::td3;
  if (name == "cem-ddpg" || name == "cem_ddpg") return Algo::cem_ddpg;
  if (name == "cem-td3" || name == "cem_td3") return Algo::cem_td3;
  if (name == "multi-td3" || name == "multi_actor_td3") return Algo::multi_actor_td3;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

std::string to_string(Algo a) {
  switch (a) {
    case Algo::cem: return "cem";
    case Algo::ddpg: return "ddpg";
    case Algo::td3: return "td3";
    case Algo::cem_ddpg: return "cem-ddpg";
    case Algo::cem_td3: return "cem-td3";
    case Algo::multi_actor_td3: return "multi-td3";
  }
  return "?";
}

BudgetMode parse_budget_mode(const std::string& name) {
  if (name == "text" || name == "per_text") return BudgetMode::per_text;
  if (name == "pseudocode" || name == "per_pseudocode") return BudgetMode::per_pseudocode;
  throw std::invalid_argument("unknown budget mode '" + name + "'");
}

std::string to_string(BudgetMode m) { return m == BudgetMode::per_text ? "text" : "pseudocode"; }

bool HybridConfig::uses_cem() const {
  return algo == Algo::cem || algo == Algo::cem_ddpg || algo == Algo::cem_td3;
}

bool HybridConfig::uses_gradient_half() const {
  return algo == Algo::cem_ddpg || algo == Algo::cem_td3;
}

rl::CriticKind HybridConfig::critic_kind() const {
  return algo == Algo::ddpg || algo == Algo::cem_ddpg ? rl::CriticKind::ddpg : rl::CriticKind::td3;
}

void HybridConfig::validate() const {
  auto fail = [](const char* key, const std::string& why) { throw ConfigError(key, why); };
  if (pop_size < 2 || pop_size % 2 != 0) fail("pop_size", "must be even and >= 2");
  if (max_steps < 1) fail("max_steps", "must be >= 1");
  if (!(sigma_end > 0.0)) fail("sigma_end", "must be > 0");
  if (!(sigma_init >= sigma_end)) fail("sigma_init", "must be >= sigma_end");
  if (!(tau_cem >= 0.0 && tau_cem < 1.0)) fail("tau_cem", "must lie in [0, 1)");
  if (elite_count < 0 || elite_count > pop_size) fail("elite_count", "must lie in [0, pop_size]");
  if (!(action_noise_std >= 0.0)) fail("action_noise_std", "must be >= 0");
  if (actor_hidden.empty()) fail("actor_hidden", "needs at least one hidden layer");
  if (critic_hidden.empty()) fail("critic_hidden", "needs at least one hidden layer");
  for (int h : actor_hidden)
    if (h < 1) fail("actor_hidden", "layer sizes must be positive");
  for (int h : critic_hidden)
    if (h < 1) fail("critic_hidden", "layer sizes must be positive");
  if (actor_nonlinearity != net::Activation::tanh && actor_nonlinearity != net::Activation::relu)
    fail("actor_nonlinearity", "must be tanh or relu");
  if (!(rl.gamma >= 0.0 && rl.gamma <= 1.0)) fail("gamma", "must lie in [0, 1]");
  if (!(rl.tau >= 0.0 && rl.tau <= 1.0)) fail("tau", "must lie in [0, 1]");
  if (rl.batch_size < 1) fail("batch_size", "must be >= 1");
  if (!(rl.actor_lr > 0.0)) fail("actor_lr", "must be > 0");
  if (!(rl.critic_lr > 0.0)) fail("critic_lr", "must be > 0");
  if (!(rl.policy_noise >= 0.0)) fail("policy_noise", "must be >= 0");
  if (!(rl.noise_clip >= 0.0)) fail("noise_clip", "must be >= 0");
  if (rl.policy_delay < 1) fail("policy_delay", "must be >= 1");
  if (buffer_capacity < 1) fail("buffer_capacity", "must be >= 1");
  if (!(gradient_budget_scale >= 0.0)) fail("gradient_budget_scale", "must be >= 0");
  if (fitness_episodes < 1) fail("fitness_episodes", "must be >= 1");
  if (report_episodes < 1) fail("report_episodes", "must be >= 1");
  if (report_interval < 1) fail("report_interval", "must be >= 1");
  if (!(expl_noise >= 0.0)) fail("expl_noise", "must be >= 0");
  if (start_steps < 0) fail("start_steps", "must be >= 0");
  if (n_actors < 0) fail("n_actors", "must be >= 0");
  if (blackbox_dim < 1) fail("blackbox_dim", "must be >= 1");
  if (!(similarity_tol >= 0.0)) fail("similarity_tol", "must be >= 0");
  if (!envs::is_episodic(env) && algo != Algo::cem)
    fail("algo", "black-box problems only support cem");
}

Eigen::Index Task::genome_dim() const {
  return blackbox ? blackbox->dim : actor.param_count();
}

Task make_task(const HybridConfig& config, std::shared_ptr<const envs::Environment> env) {
  Task t;
  const auto& s = env->spec();
  t.actor = net::actor_spec(s.obs_dim, s.action_dim, config.actor_hidden, config.actor_nonlinearity);
  t.env = std::move(env);
  return t;
}

Task make_task(const HybridConfig& config) {
  if (!envs::is_episodic(config.env)) {
    Task t;
    t.blackbox = envs::make_problem(config.env, config.blackbox_dim);
    return t;
  }
  return make_task(config, std::shared_ptr<const envs::Environment>(envs::make_env(config.env)));
}

namespace {

net::NetSpec critic_for(const Task& task, const HybridConfig& config) {
  const auto& s = task.env->spec();
  return net::critic_spec(s.obs_dim, s.action_dim, config.critic_hidden);
}

rl::LearnerConfig learner_config(const HybridConfig& config) {
  rl::LearnerConfig c = config.rl;
  c.kind = config.critic_kind();
  return c;
}

Vector initial_mean(const Task& task, const HybridConfig& config, std::uint64_t seed) {
  if (task.blackbox) {
    Rng rng = make_rng(seed, Stream::init);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector mu(task.blackbox->dim);
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = u(rng);
    return mu;
  }
  (void)config;
  return net::init_params(task.actor, derive_seed(seed, Stream::init));
}

struct Outcome {
  double fitness = 0.0;
  long steps = 0;
  std::vector<rl::Transition> transitions;
};

Outcome evaluate_genome(const Task& task, const Vector& genome, int episodes, Rng& rng,
                        double noise, bool keep) {
  if (task.blackbox) return {task.blackbox->fitness(genome), 1, {}};
  auto r = envs::evaluate(task.actor, genome, *task.env, episodes, rng, noise, keep);
  return {r.mean_fitness, r.env_steps, std::move(r.transitions)};
}

std::vector<cem::Individual> as_sampled(std::vector<Vector> genomes) {
  std::vector<cem::Individual> out;
  out.reserve(genomes.size());
  for (auto& g : genomes) out.push_back({std::move(g), std::nullopt, 0, cem::Origin::sampled});
  return out;
}

std::pair<long, long> scaled_budget(long actor_steps, int pop_size, const HybridConfig& config) {
  auto [c, a] = gradient_budget(actor_steps, pop_size, config.budget_mode);
  const double s = config.gradient_budget_scale;
  if (s == 1.0) return {c, a};
  return {static_cast<long>(std::floor(s * static_cast<double>(c))),
          static_cast<long>(std::floor(s * static_cast<double>(a)))};
}

}  // namespace

LoopState LoopState::create(const HybridConfig& config, std::uint64_t seed) {
  return create(config, seed, make_task(config));
}

LoopState LoopState::create(const HybridConfig& config, std::uint64_t seed, Task task) {
  config.validate();
  if (!config.uses_cem()) throw ConfigError("algo", "LoopState drives the CEM family only");
  LoopState s;
  s.seed = seed;
  s.dist = cem::SearchDistribution::isotropic(initial_mean(task, config, seed), config.sigma_init,
                                              config.sigma_end, config.tau_cem);
  s.archive.dist_snapshot = s.dist;
  if (config.uses_gradient_half()) {
    if (!task.episodic()) throw ConfigError("env", "gradient steps need an episodic environment");
    const auto& es = task.env->spec();
    s.learner = rl::LearnerState::create(task.actor, critic_for(task, config), learner_config(config),
                                         derive_seed(seed, Stream::init, {1}));
    s.buffer.emplace(es.obs_dim, es.action_dim, config.buffer_capacity);
  }
  s.task = std::move(task);
  return s;
}

std::pair<long, long> gradient_budget(long actor_steps, int pop_size, BudgetMode mode) {
  if (pop_size < 2 || pop_size % 2 != 0)
    throw std::invalid_argument("gradient_budget: pop_size must be even");
  const long critic = 2 * actor_steps / pop_size;
  return {critic, mode == BudgetMode::per_text ? critic : actor_steps};
}

void run_generation(LoopState& state, const HybridConfig& config) {
  const int pop = config.pop_size;
  const int half = config.uses_gradient_half() ? pop / 2 : 0;
  const auto gen = static_cast<std::uint64_t>(state.generation);
  GenerationStats stats;

  // (1) draw the population; the gradient half is always freshly sampled
  Rng sampling = make_rng(state.seed, Stream::sampling, {gen});
  std::vector<cem::Individual> population;
  if (half > 0) population = as_sampled(cem::sample_population(state.dist, half, sampling));
  // pure CEM (half == 0) never mixes
  if (config.importance_mixing && half > 0) {
    Rng mixing_rng = make_rng(state.seed, Stream::mixing, {gen});
    auto rest = mixing::importance_mix(state.archive, state.dist, pop - half, mixing_rng);
    // reused individuals first so they sit in the non-gradient half's front
    std::stable_partition(rest.begin(), rest.end(),
                          [](const cem::Individual& i) { return i.origin == cem::Origin::reused; });
    population.insert(population.end(), std::make_move_iterator(rest.begin()),
                      std::make_move_iterator(rest.end()));
  } else {
    auto rest = as_sampled(cem::sample_population(state.dist, pop - half, sampling));
    population.insert(population.end(), std::make_move_iterator(rest.begin()),
                      std::make_move_iterator(rest.end()));
  }

  // (2) gradient phase on the first half, budget from the previous generation
  if (half > 0) {
    const auto [critic_batches, actor_batches] = scaled_budget(state.actor_steps, pop, config);
    for (int i = 0; i < half; ++i) {
      auto& ind = population[i];
      rl::ActorLearner actor = rl::ActorLearner::from(ind.genome, config.rl.actor_lr);
      if (critic_batches > 0 || actor_batches > 0) {
        Rng learn = make_rng(state.seed, Stream::learner, {gen, static_cast<std::uint64_t>(i)});
        try {
          const auto ps = rl::gradient_phase(*state.learner, actor, *state.buffer, critic_batches,
                                             actor_batches, learn);
          stats.critic_batches += ps.critic_batches;
          stats.actor_batches += ps.actor_batches;
        } catch (const DivergenceError& e) {
          throw DivergenceError("generation " + std::to_string(state.generation) + ": " + e.what());
        }
      }
      ind.genome = std::move(actor.params);
      ind.origin = cem::Origin::gradient_stepped;
      ++stats.gradient_stepped;
    }
  }

  // (3) evaluate; reused individuals keep their cached fitness
  long new_steps = 0;
  for (int i = 0; i < pop; ++i) {
    auto& ind = population[i];
    if (ind.origin == cem::Origin::reused && ind.fitness) {
      ind.env_steps = 0;
      ++stats.reused;
      continue;
    }
    Rng eval = make_rng(state.seed, Stream::evaluation, {gen, static_cast<std::uint64_t>(i)});
    const double noise = i < half ? config.action_noise_std : 0.0;
    Outcome out = evaluate_genome(state.task, ind.genome, config.fitness_episodes, eval, noise,
                                  state.buffer.has_value());
    ind.fitness = out.fitness;
    ind.env_steps = out.steps;
    new_steps += out.steps;
    if (state.buffer)
      for (const auto& t : out.transitions) state.buffer->push(t);
  }

  // (4) step accounting
  state.actor_steps = new_steps;
  state.total_steps += new_steps;

  // (5) refit on the top individuals of the whole population
  std::vector<Vector> genomes;
  genomes.reserve(population.size());
  for (const auto& ind : population) genomes.push_back(ind.genome);
  stats.similarity = harness::similarity_histogram(genomes, config.similarity_tol).average;

  const auto elites = cem::select_elites(population, config.elites());
  const auto weights = cem::compute_weights(config.weight_scheme, config.elites());
  state.archive.individuals = mixing::mixable_subset(population);
  state.archive.dist_snapshot = state.dist;
  state.dist = cem::update_distribution(state.dist, elites, weights);
  state.population = std::move(population);
  state.last = stats;
  ++state.generation;
}

namespace {

RunRecord report_actor(const Task& task, const Vector& genome, const HybridConfig& config,
                       std::uint64_t seed, std::uint64_t index) {
  RunRecord r;
  if (task.blackbox) {
    r.eval_mean = task.blackbox->fitness(genome);
    r.returns = {r.eval_mean};
    return r;
  }
  Rng rng = make_rng(seed, Stream::reporting, {index});
  auto e = envs::evaluate(task.actor, genome, *task.env, config.report_episodes, rng, 0.0, false);
  r.eval_mean = e.mean_fitness;
  r.returns = std::move(e.returns);
  r.report_steps = e.env_steps;
  return r;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<RunRecord> run_cem_family(const HybridConfig& config, std::uint64_t seed, Task task) {
  const auto t0 = Clock::now();
  LoopState state = LoopState::create(config, seed, std::move(task));
  std::vector<RunRecord> records;
  do {
    run_generation(state, config);
    RunRecord r = report(state, config);
    r.wall_time_s = seconds_since(t0);
    records.push_back(std::move(r));
  } while (state.total_steps < config.max_steps);
  return records;
}

std::vector<RunRecord> run_single_agent(const HybridConfig& config, std::uint64_t seed, Task task) {
  const auto t0 = Clock::now();
  const auto& es = task.env->spec();
  rl::LearnerState learner = rl::LearnerState::create(
      task.actor, critic_for(task, config), learner_config(config), derive_seed(seed, Stream::init, {1}));
  rl::ActorLearner actor =
      rl::ActorLearner::from(initial_mean(task, config, seed), config.rl.actor_lr);
  rl::ReplayBuffer buffer(es.obs_dim, es.action_dim, config.buffer_capacity);
  Rng explore = make_rng(seed, Stream::exploration);
  Rng learn = make_rng(seed, Stream::learner);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, config.expl_noise > 0.0 ? config.expl_noise : 1.0);

  std::vector<RunRecord> records;
  long total = 0;
  long next_report = config.report_interval;
  int episode = 0;
  auto record = [&] {
    RunRecord r = report_actor(task, actor.params, config, seed, records.size());
    r.total_steps = total;
    r.generation = episode;
    r.wall_time_s = seconds_since(t0);
    records.push_back(std::move(r));
  };

  while (total < config.max_steps) {
    Vector state = task.env->reset(explore());
    long length = 0;
    for (int t = 0; t < es.horizon; ++t) {
      Vector action(es.action_dim);
      if (total + length < config.start_steps) {
        for (auto& a : action) a = uniform(explore);
      } else {
        action = net::forward(task.actor, actor.params, state);
        if (config.expl_noise > 0.0)
          for (auto& a : action) a = std::clamp(a + noise(explore), -1.0, 1.0);
      }
      auto r = task.env->step(state, action);
      if (!r.next_state.allFinite()) throw DivergenceError("environment produced a non-finite state");
      buffer.push({state, action, r.reward, r.next_state, r.done});
      state = std::move(r.next_state);
      ++length;
      if (r.done) break;
    }
    total += length;
    ++episode;
    if (total >= config.start_steps) {
      const long iterations = static_cast<long>(
          std::floor(config.gradient_budget_scale * static_cast<double>(length)));
      try {
        rl::interleaved_training(learner, actor, buffer, iterations, learn);
      } catch (const DivergenceError& e) {
        throw DivergenceError("episode " + std::to_string(episode) + ": " + e.what());
      }
    }
    while (total >= next_report) {
      record();
      next_report += config.report_interval;
    }
  }
  if (records.empty() || records.back().total_steps != total) record();
  return records;
}

std::vector<RunRecord> run_multi_actor(const HybridConfig& config, std::uint64_t seed, Task task) {
  const auto t0 = Clock::now();
  MultiActorState state = MultiActorState::create(config, seed, std::move(task));
  std::vector<RunRecord> records;
  long next_report = config.report_interval;
  auto record = [&] {
    const auto best = std::max_element(state.last_fitness.begin(), state.last_fitness.end()) -
                      state.last_fitness.begin();
    RunRecord r = report_actor(state.task, state.actors[best].params, config, seed, records.size());
    r.total_steps = state.total_steps;
    r.generation = state.round;
    r.wall_time_s = seconds_since(t0);
    records.push_back(std::move(r));
  };
  do {
    multi_actor_step(state, config);
    while (state.total_steps >= next_report) {
      record();
      next_report += config.report_interval;
    }
  } while (state.total_steps < config.max_steps);
  if (records.empty() || records.back().total_steps != state.total_steps) record();
  return records;
}

}  // namespace

RunRecord report(const LoopState& state, const HybridConfig& config) {
  RunRecord r = report_actor(state.task, state.dist.mu, config, state.seed,
                             static_cast<std::uint64_t>(state.generation));
  r.total_steps = state.total_steps;
  r.generation = state.generation;
  r.reuse_fraction = static_cast<double>(state.last.reused) / config.pop_size;
  r.epsilon = state.dist.epsilon;
  r.similarity = state.last.similarity;
  return r;
}

std::vector<RunRecord> run_experiment(const HybridConfig& config, std::uint64_t seed) {
  config.validate();
  return run_experiment(config, seed, make_task(config));
}

std::vector<RunRecord> run_experiment(const HybridConfig& config, std::uint64_t seed, Task task) {
  config.validate();
  switch (config.algo) {
    case Algo::cem:
    case Algo::cem_ddpg:
    case Algo::cem_td3:
      return run_cem_family(config, seed, std::move(task));
    case Algo::ddpg:
    case Algo::td3:
      return run_single_agent(config, seed, std::move(task));
    case Algo::multi_actor_td3:
      return run_multi_actor(config, seed, std::move(task));
  }
  return {};
}

MultiActorState MultiActorState::create(const HybridConfig& config, std::uint64_t seed, Task task) {
  config.validate();
  if (!task.episodic()) throw ConfigError("env", "multi-actor TD3 needs an episodic environment");
  const auto& es = task.env->spec();
  rl::LearnerConfig lc = learner_config(config);
  lc.kind = rl::CriticKind::td3;
  MultiActorState s{seed,
                    task,
                    {},
                    {},
                    rl::LearnerState::create(task.actor, critic_for(task, config), lc,
                                             derive_seed(seed, Stream::init, {1})),
                    rl::ReplayBuffer(es.obs_dim, es.action_dim, config.buffer_capacity)};
  // initialized like a CEM-TD3 generation 0
  const auto dist = cem::SearchDistribution::isotropic(initial_mean(task, config, seed),
                                                       config.sigma_init, config.sigma_end,
                                                       config.tau_cem);
  Rng sampling = make_rng(seed, Stream::sampling, {0});
  for (auto& g : cem::sample_population(dist, config.actors(), sampling))
    s.actors.push_back(rl::ActorLearner::from(std::move(g), config.rl.actor_lr));
  s.last_fitness.assign(s.actors.size(), 0.0);
  return s;
}

void multi_actor_step(MultiActorState& state, const HybridConfig& config) {
  if (state.actors.empty()) throw std::invalid_argument("multi_actor_step: no actors");
  const auto round = static_cast<std::uint64_t>(state.round);
  long round_steps = 0;
  for (std::size_t i = 0; i < state.actors.size(); ++i) {
    Rng eval = make_rng(state.seed, Stream::evaluation, {round, i});
    auto r = envs::evaluate(state.task.actor, state.actors[i].params, *state.task.env,
                            config.fitness_episodes, eval, config.expl_noise, true);
    state.last_fitness[i] = r.mean_fitness;
    round_steps += r.env_steps;
    for (const auto& t : r.transitions) state.buffer.push(t);
  }
  state.total_steps += round_steps;

  const int pseudo_pop = 2 * static_cast<int>(state.actors.size());
  const auto [critic_batches, actor_batches] = scaled_budget(round_steps, pseudo_pop, config);
  state.last_critic_batches = 0;
  for (std::size_t i = 0; i < state.actors.size(); ++i) {
    Rng learn = make_rng(state.seed, Stream::learner, {round, i});
    try {
      const auto ps = rl::gradient_phase(state.learner, state.actors[i], state.buffer, critic_batches,
                                         actor_batches, learn);
      state.last_critic_batches += ps.critic_batches;
    } catch (const DivergenceError& e) {
      throw DivergenceError("round " + std::to_string(state.round) + ": " + e.what());
    }
  }
  ++state.round;
}

}  // namespace cemrl::hybrid

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance --cli path/to/cemrl [--out DIR] [N ...]
//
// With no criterion numbers every criterion runs. Criteria 5, 6 and 9 train
// the RL variants for 100k environment steps per seed and dominate runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cemrl/cem.hpp"
#include "cemrl/envs.hpp"
#include "cemrl/harness.hpp"
#include "cemrl/hybrid.hpp"
#include "cemrl/mixing.hpp"
#include "cemrl/net.hpp"
#include "cemrl/rl.hpp"

using namespace cemrl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Desk-scale settings shared by the learning-curve criteria.
hybrid::HybridConfig desk(hybrid::Algo algo, const std::string& env) {
  hybrid::HybridConfig c;
  c.algo = algo;
  c.env = env;
  c.max_steps = 100000;
  c.actor_hidden = {32, 32};
  c.critic_hidden = {32, 32};
  return c;
}

struct Runs {
  std::vector<double> finals;
  std::vector<std::vector<RunRecord>> curves;
};

// ---------------------------------------------------------------------------

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst_backward = 0.0, worst_actor = 0.0;
  const net::Activation hidden[] = {net::Activation::tanh, net::Activation::relu,
                                    net::Activation::leaky_relu};
  for (int trial = 0; trial < 100; ++trial) {
    net::NetSpec spec;
    const int depth = 2 + trial % 3;
    for (int i = 0; i < depth; ++i) spec.layer_sizes.push_back(1 + static_cast<int>(rng() % 8));
    spec.hidden = hidden[trial % 3];
    spec.output = trial % 2 ? net::Activation::tanh : net::Activation::identity;
    spec.leaky_slope = 0.1;
    Vector p = random_vector(spec.param_count(), rng, 0.7);
    const Vector x = random_vector(spec.input_size(), rng);
    const Vector up = random_vector(spec.output_size(), rng);
    const auto g = net::backward(spec, p, x, up);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + h;
      const double f1 = net::forward(spec, p, x).dot(up);
      p[i] = keep - h;
      const double f0 = net::forward(spec, p, x).dot(up);
      p[i] = keep;
      worst_backward = std::max(worst_backward, rel_error(g.params[i], (f1 - f0) / (2 * h)));
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    rl::LearnerConfig cfg;
    cfg.kind = trial % 2 ? rl::CriticKind::td3 : rl::CriticKind::ddpg;
    const int obs = 1 + trial % 4, act = 1 + trial % 2;
    auto learner = rl::LearnerState::create(net::actor_spec(obs, act, {6}),
                                            net::critic_spec(obs, act, {8, 8}), cfg, trial);
    rl::Batch b;
    b.states = Matrix(obs, 5);
    for (Eigen::Index j = 0; j < 5; ++j) b.states.col(j) = random_vector(obs, rng);
    Vector a = net::init_params(learner.actor_spec, 1000 + trial);
    const Vector g = rl::actor_objective_gradient(learner, a, b);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double keep = a[i];
      a[i] = keep + h;
      const double f1 = rl::actor_objective(learner, a, b);
      a[i] = keep - h;
      const double f0 = rl::actor_objective(learner, a, b);
      a[i] = keep;
      worst_actor = std::max(worst_actor, rel_error(g[i], (f1 - f0) / (2 * h)));
    }
  }
  const double t = seconds_since(t0);
  return {worst_backward < 1e-4 && worst_actor < 1e-4 && t < 30.0,
          "max rel err backward " + fmt(worst_backward) + ", actor objective " + fmt(worst_actor) +
              " (< 1e-4); " + fmt(t) + " s (< 30 s)"};
}

Verdict cem_oracle_suite() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> pos(1e-3, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 1 + trial % 6, k = 1 + trial % 5;
    cem::SearchDistribution d;
    d.mu = random_vector(dim, rng);
    d.sigma2 = Vector(dim);
    for (auto& s : d.sigma2) s = pos(rng);
    d.epsilon = 1e-3;
    std::vector<Vector> elites;
    for (int i = 0; i < k; ++i) elites.push_back(random_vector(dim, rng));
    const auto scheme = trial % 2 ? cem::WeightScheme::uniform : cem::WeightScheme::log_rank;
    const auto next = cem::update_distribution(d, elites, cem::compute_weights(scheme, k));
    double norm = 0.0;
    std::vector<double> lam(k);
    for (int i = 0; i < k; ++i) norm += lam[i] = scheme == cem::WeightScheme::uniform ? 1.0 : std::log(1.0 + k) / (i + 1);
    for (int j = 0; j < dim; ++j) {
      double m = 0.0, v = 0.0;
      for (int i = 0; i < k; ++i) {
        m += lam[i] / norm * elites[i][j];
        v += lam[i] / norm * (elites[i][j] - d.mu[j]) * (elites[i][j] - d.mu[j]);
      }
      worst = std::max({worst, std::abs(next.mu[j] - m), std::abs(next.sigma2[j] - v - d.epsilon)});
    }
  }
  auto d = cem::SearchDistribution::isotropic(Vector::Zero(1), 1e-3, 1e-5, 0.95);
  double worst_decay = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    d = cem::decay_epsilon(d);
    const double closed = 1e-5 + (1e-3 - 1e-5) * std::pow(0.95, k);
    worst_decay = std::max(worst_decay, std::abs(d.epsilon - closed));
  }
  return {worst <= 1e-12 && worst_decay <= 1e-12,
          "50 instances max abs err " + fmt(worst) + ", decay vs closed form " + fmt(worst_decay) +
              " (<= 1e-12)"};
}

double overlap(double m0, double v0, double m1, double v1) {
  auto pdf = [](double x, double m, double v) {
    return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2 * std::numbers::pi * v);
  };
  const double lo = std::min(m0 - 12 * std::sqrt(v0), m1 - 12 * std::sqrt(v1));
  const double hi = std::max(m0 + 12 * std::sqrt(v0), m1 + 12 * std::sqrt(v1));
  const int n = 200000;
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    s += std::min(pdf(x, m0, v0), pdf(x, m1, v1)) * (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2));
  }
  return s * h / 3;
}

Verdict mixing_suite() {
  const auto t0 = Clock::now();
  auto gauss = [](double m, double v) {
    cem::SearchDistribution d;
    d.mu = Vector::Constant(1, m);
    d.sigma2 = Vector::Constant(1, v);
    d.epsilon = d.sigma_end = 1e-5;
    return d;
  };
  auto archive_of = [](const cem::SearchDistribution& d, int n, Rng& rng) {
    mixing::GenerationArchive a;
    a.dist_snapshot = d;
    for (auto& g : cem::sample_population(d, n, rng)) a.individuals.push_back({std::move(g), 0.0, 1});
    return a;
  };

  Rng rng(303);
  const auto same = cem::SearchDistribution::isotropic(Vector::Zero(20), 0.1, 1e-5, 0.95);
  const auto archive = archive_of(same, 10, rng);
  int reused = 0;
  for (const auto& ind : mixing::importance_mix(archive, same, 10, rng))
    reused += ind.origin == cem::Origin::reused;

  std::mt19937_64 pick(304);
  std::uniform_real_distribution<double> mean_d(-1, 1), var_d(0.3, 2.0);
  double worst = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const double m0 = mean_d(pick), v0 = var_d(pick), m1 = mean_d(pick), v1 = var_d(pick);
    Rng r(400 + pair);
    const auto a = archive_of(gauss(m0, v0), 50000, r);
    mixing::MixStats st;
    mixing::importance_mix(a, gauss(m1, v1), 50000, r, &st);
    const double ov = overlap(m0, v0, m1, v1);
    worst = std::max({worst, std::abs(double(st.old_accepted) / st.old_tested - ov),
                      std::abs(double(st.fresh_accepted) / st.iterations - (1 - ov))});
  }
  const double t = seconds_since(t0);
  return {reused == 10 && worst < 0.01 && t < 60.0,
          "identity reuse " + std::to_string(reused * 10) + "%, max acceptance-rate gap " +
              fmt(worst) + " (< 0.01); " + fmt(t) + " s (< 60 s)"};
}

Verdict sphere_convergence() {
  const auto t0 = Clock::now();
  hybrid::HybridConfig c;
  c.algo = hybrid::Algo::cem;
  c.env = "sphere";
  c.blackbox_dim = 10;
  c.sigma_init = 0.1;
  int solved = 0, worst_gen = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto state = hybrid::LoopState::create(c, seed);
    while (state.generation < 500 && state.dist.mu.norm() >= 1e-2) hybrid::run_generation(state, c);
    if (state.dist.mu.norm() < 1e-2) ++solved;
    worst_gen = std::max(worst_gen, state.generation);
  }
  const double t = seconds_since(t0);
  return {solved == 10 && t < 120.0, std::to_string(solved) + "/10 seeds reach |mu| < 1e-2, slowest in " +
                                         std::to_string(worst_gen) + " generations; " + fmt(t) + " s"};
}

// Cached multi-seed runs, also written out as CSV for inspection.
class Campaign {
 public:
  explicit Campaign(fs::path out) : out_(std::move(out)) {}

  const Runs& get(hybrid::Algo algo, const std::string& env, int seeds = 5) {
    const std::string key = hybrid::to_string(algo) + "_" + env;
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Runs runs;
    const auto c = desk(algo, env);
    for (int s = 0; s < seeds; ++s) {
      const auto t0 = Clock::now();
      auto rec = hybrid::run_experiment(c, static_cast<std::uint64_t>(s));
      harness::emit_csv(rec, out_ / key / ("run_" + std::to_string(s) + ".csv"));
      std::cout << "    " << key << " seed " << s << ": final " << fmt(rec.back().eval_mean, 4)
                << " after " << rec.back().total_steps << " steps (" << fmt(seconds_since(t0)) << " s)"
                << std::endl;
      runs.finals.push_back(rec.back().eval_mean);
      runs.curves.push_back(std::move(rec));
    }
    harness::emit_csv(harness::aggregate(runs.curves), out_ / key / "aggregate.csv");
    return cache_.emplace(key, std::move(runs)).first->second;
  }

 private:
  fs::path out_;
  std::map<std::string, Runs> cache_;
};

std::string summary(const char* name, const std::vector<double>& v) {
  return std::string(name) + " " + fmt(harness::mean(v), 4) + " +- " +
         fmt(harness::standard_error(v), 3);
}

double diff_se(const std::vector<double>& a, const std::vector<double>& b) {
  return std::hypot(harness::standard_error(a), harness::standard_error(b));
}

Verdict informative_ordering(Campaign& camp) {
  const auto t0 = Clock::now();
  const auto& hyb = camp.get(hybrid::Algo::cem_td3, "pointmass").finals;
  const auto& td3 = camp.get(hybrid::Algo::td3, "pointmass").finals;
  const auto& cem = camp.get(hybrid::Algo::cem, "pointmass").finals;
  const double mh = harness::mean(hyb), mt = harness::mean(td3), mc = harness::mean(cem);
  const double gap = (mh - mc) / diff_se(hyb, cem);
  return {mh >= mt && mt >= mc && gap >= 3.0,
          summary("CEM-TD3", hyb) + ", " + summary("TD3", td3) + ", " + summary("CEM", cem) +
              "; CEM-TD3 - CEM = " + fmt(gap) + " SE (>= 3); " + fmt(seconds_since(t0)) + " s"};
}

Verdict deceptive_regime(Campaign& camp) {
  const auto& cem = camp.get(hybrid::Algo::cem, "deceptive").finals;
  const auto& hyb = camp.get(hybrid::Algo::cem_td3, "deceptive").finals;
  return {harness::mean(cem) > harness::mean(hyb), summary("CEM", cem) + " vs " + summary("CEM-TD3", hyb)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& out) {
  const std::string cmd = "\"" + cli + "\" " + args + " --out \"" + out.string() + "\" > /dev/null";
  return std::system(cmd.c_str());
}

Verdict ablation_identity(const std::string& cli, const fs::path& out) {
  if (cli.empty()) return {false, "no --cli path given"};
  const std::string common =
      " --env pointmass --seed 3 --max-steps 20000 --set actor_hidden=32,32 --set critic_hidden=32,32";
  const int rc1 = run_cli(cli, "--algo cem" + common, out / "ablation_cem");
  const int rc2 = run_cli(cli, "--algo cem-td3 --set gradient_budget_scale=0" + common, out / "ablation_cem_td3");
  const auto a = slurp(out / "ablation_cem" / "run_3.csv");
  const auto b = slurp(out / "ablation_cem_td3" / "run_3.csv");
  const bool same = rc1 == 0 && rc2 == 0 && !a.empty() && a == b;
  return {same, std::string(same ? "identical" : "different") + " CSV (" + std::to_string(a.size()) +
                    " bytes) for cem vs cem-td3 with zero gradient budget"};
}

Verdict twin_min() {
  long elements = 0, violations = 0;
  for (int k = 0; k < 1000; ++k) {
    rl::LearnerConfig cfg;
    auto td3 = rl::LearnerState::create(net::actor_spec(3, 2, {8}), net::critic_spec(3, 2, {16, 16}), cfg, k);
    td3.q1_target = net::init_params(td3.critic_spec, 5000 + k);
    td3.q2_target = net::init_params(td3.critic_spec, 9000 + k);
    auto single = td3;
    single.config.kind = rl::CriticKind::ddpg;
    std::mt19937_64 rng(k);
    rl::Batch b;
    b.states = Matrix::Random(3, 32);
    b.actions = Matrix::Random(2, 32);
    b.next_states = Matrix::Random(3, 32) * 2.0;
    b.rewards = random_vector(32, rng);
    b.dones = Vector::Zero(32);
    for (int j = 0; j < 32; j += 7) b.dones[j] = 1.0;
    Rng noise(k);
    const Vector actor = net::init_params(td3.actor_spec, k);
    const Matrix next = rl::target_actions(td3, b.next_states, actor, noise);
    const Vector y2 = rl::targets_from_actions(td3, b, next);
    const Vector y1 = rl::targets_from_actions(single, b, next);
    elements += 32;
    violations += (y2.array() > y1.array()).count();
  }
  return {violations == 0, std::to_string(violations) + " of " + std::to_string(elements) +
                               " targets exceed the single-critic target over 1000 batches"};
}

Verdict multi_actor_contrast(Campaign& camp) {
  const auto& hyb = camp.get(hybrid::Algo::cem_td3, "pointmass").finals;
  const auto& multi = camp.get(hybrid::Algo::multi_actor_td3, "pointmass").finals;
  const double z = (harness::mean(hyb) - harness::mean(multi)) / diff_se(hyb, multi);
  return {harness::mean(hyb) >= harness::mean(multi),
          summary("CEM-TD3", hyb) + " vs " + summary("multi-actor TD3", multi) + "; gap " + fmt(z) +
              " SE (" + (std::abs(z) >= 2.0 ? "significant" : "within noise") + ")"};
}

Verdict determinism(const std::string& cli, const fs::path& out) {
  if (cli.empty()) return {false, "no --cli path given"};
  int identical = 0, total = 0;
  for (const char* algo : {"cem-td3", "td3", "multi-td3"}) {
    const std::string args = std::string("--algo ") + algo +
                             " --env pendulum --seed 11 --max-steps 6000 --set actor_hidden=16,16"
                             " --set critic_hidden=16,16 --set importance_mixing=on";
    const auto a = out / (std::string("det_") + algo + "_a");
    const auto b = out / (std::string("det_") + algo + "_b");
    const int rc = run_cli(cli, args, a) | run_cli(cli, args, b);
    for (const char* f : {"run_11.csv", "aggregate.csv"}) {
      ++total;
      const auto x = slurp(a / f);
      identical += rc == 0 && !x.empty() && x == slurp(b / f);
    }
  }
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " CSV files byte-identical across repeated CLI runs"};
}

Verdict diversity() {
  auto c = desk(hybrid::Algo::cem, "pointmass");
  auto state = hybrid::LoopState::create(c, 0);
  double worst = 0.0;
  for (int g = 0; g < 50; ++g) {
    hybrid::run_generation(state, c);
    worst = std::max(worst, state.last.similarity);
  }
  return {worst < 0.01, "max average pairwise similarity over 50 generations " + fmt(worst) + " (< 0.01)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli;
  std::string out = "acceptance_out";
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the cemrl executable");
  app.add_option("--out", out, "directory for CSV artifacts");
  app.add_option("criteria", only, "criterion numbers to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const fs::path out_dir = out;
  fs::create_directories(out_dir);
  Campaign camp(out_dir);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient suite", gradient_suite},
      {"CEM oracle suite", cem_oracle_suite},
      {"importance-mixing suite", mixing_suite},
      {"CEM black-box convergence", sphere_convergence},
      {"informative-gradient ordering (point-mass)", [&] { return informative_ordering(camp); }},
      {"deceptive-gradient regime (corridor)", [&] { return deceptive_regime(camp); }},
      {"ablation identity", [&] { return ablation_identity(cli, out_dir); }},
      {"twin-min conservatism", twin_min},
      {"multi-actor contrast (point-mass)", [&] { return multi_actor_contrast(camp); }},
      {"determinism", [&] { return determinism(cli, out_dir); }},
      {"diversity diagnostic", diversity},
  };

  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(n)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << n << ": " << criteria[i].first
              << " | " << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

// Command-line front-end: runs one or more seeds of an algorithm on an
// environment and writes per-run and aggregate learning curves as CSV.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cemrl/errors.hpp"
#include "cemrl/harness.hpp"

namespace {

using cemrl::harness::ExperimentConfig;

int run(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const fs::path out = config.out_dir;
  std::vector<std::vector<cemrl::RunRecord>> runs;
  for (int r = 0; r < config.runs; ++r) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
    auto records = cemrl::hybrid::run_experiment(config.hybrid, seed);
    cemrl::harness::emit_csv(records, out / ("run_" + std::to_string(seed) + ".csv"));
    const auto& last = records.back();
    std::cout << "seed " << seed << ": " << records.size() << " records, total_steps "
              << last.total_steps << ", final eval_mean "
              << cemrl::harness::format_number(last.eval_mean) << "\n";
    runs.push_back(std::move(records));
  }
  const auto curve = cemrl::harness::aggregate(runs, config.hybrid.report_interval);
  cemrl::harness::emit_csv(curve, out / "aggregate.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-entropy method, TD3/DDPG and CEM-RL policy search"};
  app.set_version_flag("--version", "cemrl 0.1.0");

  std::string config_file;
  std::vector<std::string> overrides;
  // Flags are stored as (key, value) pairs and applied after the config file.
  std::vector<std::pair<std::string, std::string>> flags;
  auto flag = [&](const char* name, const char* key, const char* help) {
    app.add_option_function<std::string>(
        name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, help);
  };

  app.add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
  flag("--algo", "algo", "cem|ddpg|td3|cem-ddpg|cem-td3|multi-td3");
  flag("--env", "env", "pointmass|pendulum|deceptive|sphere|rastrigin");
  flag("--seed", "seed", "root seed; run r uses seed + r");
  flag("--max-steps", "max_steps", "environment step budget per run");
  flag("--runs", "runs", "number of seeds");
  flag("--pop-size", "pop_size", "population size (even)");
  flag("--importance-mixing", "importance_mixing", "on|off");
  flag("--action-noise", "action_noise_std", "Gaussian action noise for the gradient half");
  flag("--actor-nonlinearity", "actor_nonlinearity", "tanh|relu");
  flag("--budget-mode", "budget_mode", "text|pseudocode");
  flag("--out", "out", "output directory");
  app.add_option("--set", overrides, "extra key=value setting, repeatable");
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print accepted configuration keys and exit");

  CLI11_PARSE(app, argc, argv);

  if (list_keys) {
    for (const auto& k : cemrl::harness::config_keys()) std::cout << k << "\n";
    return 0;
  }

  try {
    ExperimentConfig config = config_file.empty() ? cemrl::harness::parse_config("")
                                                  : cemrl::harness::parse_config_file(config_file);
    for (const auto& [k, v] : flags) cemrl::harness::apply_setting(config, k, v);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw cemrl::ConfigError(kv, "--set expects key=value");
      cemrl::harness::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (config.runs < 1) throw cemrl::ConfigError("runs", "must be >= 1");
    config.hybrid.validate();
    return run(config);
  } catch (const cemrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cemrl::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

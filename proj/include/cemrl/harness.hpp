#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cemrl/diagnostics.hpp"
#include "cemrl/hybrid.hpp"
#include "cemrl/record.hpp"

namespace cemrl::harness {

/// Everything one CLI invocation needs.
struct ExperimentConfig {
  hybrid::HybridConfig hybrid;
  std::uint64_t seed = 0;
  int runs = 1;
  std::string out_dir = ".";
};

/// Sets one key from its textual value. Throws ConfigError naming the key
/// when it is unknown or the value does not parse.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` lines; `#` starts a comment. Unknown keys and
/// out-of-range values are rejected. Empty text yields the defaults.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// Names accepted by apply_setting, for help output.
std::vector<std::string> config_keys();

struct CurvePoint {
  long total_steps = 0;
  int generation = 0;
  double mean = 0.0;
  double median = 0.0;
  double ci68 = 0.0;  // one standard error of the mean over runs
  double reuse_fraction = 0.0;
  double epsilon = 0.0;
};

struct AggregateCurve {
  std::vector<CurvePoint> points;
  int n_runs = 0;
};

/// Interpolates every run linearly onto a common grid of `interval` env
/// steps and summarizes per checkpoint. The grid stops at the shortest run's
/// final total_steps; before a run's first record its first value is held.
AggregateCurve aggregate(const std::vector<std::vector<RunRecord>>& runs, long interval = 5000);

double mean(std::span<const double> v);
double median(std::vector<double> v);
/// Sample standard deviation over sqrt(n); 0 for fewer than two values.
double standard_error(std::span<const double> v);

inline constexpr std::string_view kCsvHeader =
    "total_steps,generation,eval_mean,eval_median,ci68,reuse_fraction,epsilon";

/// Shortest round-trip decimal representation.
std::string format_number(double v);

std::string to_csv(const std::vector<RunRecord>& records);
std::string to_csv(const AggregateCurve& curve);
void write_file(const std::filesystem::path& path, const std::string& contents);
void emit_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path);
void emit_csv(const AggregateCurve& curve, const std::filesystem::path& path);

/// Parses a file produced by to_csv back into curve points.
std::vector<CurvePoint> parse_csv(std::string_view text);

}  // namespace cemrl::harness

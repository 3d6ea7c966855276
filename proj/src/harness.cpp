#include "cemrl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cemrl/errors.hpp"

namespace cemrl::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(std::string(key), "cannot parse '" + std::string(text) + "'");
  return value;
}

bool parse_switch(std::string_view key, std::string_view text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError(std::string(key), "expected on|off, got '" + std::string(text) + "'");
}

std::vector<int> parse_sizes(std::string_view key, std::string_view text) {
  std::vector<int> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<int>(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError(std::string(key), "expected a comma-separated list");
  return out;
}

template <typename F>
auto rethrow_as_config(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(key), e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  using hybrid::HybridConfig;
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto real = [&t](const char* name, auto member) {
      t[name] = [member](ExperimentConfig& c, std::string_view k, std::string_view v) {
        member(c) = parse_number<double>(k, v);
      };
    };
    auto integer = [&t](const char* name, auto member) {
      t[name] = [member](ExperimentConfig& c, std::string_view k, std::string_view v) {
        using T = std::remove_reference_t<decltype(member(c))>;
        member(c) = parse_number<T>(k, v);
      };
    };
    t["algo"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      c.hybrid.algo = rethrow_as_config(k, [&] { return hybrid::parse_algo(std::string(v)); });
    };
    t["env"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      const std::string name(v);
      static const char* known[] = {"pointmass", "pendulum", "deceptive", "sphere", "rastrigin"};
      if (std::find(std::begin(known), std::end(known), name) == std::end(known))
        throw ConfigError(std::string(k), "unknown environment '" + name + "'");
      c.hybrid.env = name;
    };
    t["importance_mixing"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      c.hybrid.importance_mixing = parse_switch(k, v);
    };
    t["actor_nonlinearity"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      if (v != "tanh" && v != "relu") throw ConfigError(std::string(k), "expected tanh or relu");
      c.hybrid.actor_nonlinearity = net::parse_activation(std::string(v));
    };
    t["budget_mode"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      c.hybrid.budget_mode =
          rethrow_as_config(k, [&] { return hybrid::parse_budget_mode(std::string(v)); });
    };
    t["weight_scheme"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      c.hybrid.weight_scheme =
          rethrow_as_config(k, [&] { return cem::parse_weight_scheme(std::string(v)); });
    };
    t["actor_hidden"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      c.hybrid.actor_hidden = parse_sizes(k, v);
    };
    t["critic_hidden"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      c.hybrid.critic_hidden = parse_sizes(k, v);
    };
    t["out"] = [](ExperimentConfig& c, std::string_view, std::string_view v) {
      c.out_dir = std::string(v);
    };
    integer("seed", [](ExperimentConfig& c) -> std::uint64_t& { return c.seed; });
    integer("runs", [](ExperimentConfig& c) -> int& { return c.runs; });
    integer("pop_size", [](ExperimentConfig& c) -> int& { return c.hybrid.pop_size; });
    integer("max_steps", [](ExperimentConfig& c) -> long& { return c.hybrid.max_steps; });
    integer("elite_count", [](ExperimentConfig& c) -> int& { return c.hybrid.elite_count; });
    integer("batch_size", [](ExperimentConfig& c) -> int& { return c.hybrid.rl.batch_size; });
    integer("policy_delay", [](ExperimentConfig& c) -> int& { return c.hybrid.rl.policy_delay; });
    integer("buffer_capacity",
            [](ExperimentConfig& c) -> std::size_t& { return c.hybrid.buffer_capacity; });
    integer("fitness_episodes", [](ExperimentConfig& c) -> int& { return c.hybrid.fitness_episodes; });
    integer("report_episodes", [](ExperimentConfig& c) -> int& { return c.hybrid.report_episodes; });
    integer("report_interval", [](ExperimentConfig& c) -> long& { return c.hybrid.report_interval; });
    integer("start_steps", [](ExperimentConfig& c) -> long& { return c.hybrid.start_steps; });
    integer("n_actors", [](ExperimentConfig& c) -> int& { return c.hybrid.n_actors; });
    integer("blackbox_dim", [](ExperimentConfig& c) -> int& { return c.hybrid.blackbox_dim; });
    real("action_noise_std", [](ExperimentConfig& c) -> double& { return c.hybrid.action_noise_std; });
    real("sigma_init", [](ExperimentConfig& c) -> double& { return c.hybrid.sigma_init; });
    real("sigma_end", [](ExperimentConfig& c) -> double& { return c.hybrid.sigma_end; });
    real("tau_cem", [](ExperimentConfig& c) -> double& { return c.hybrid.tau_cem; });
    real("gamma", [](ExperimentConfig& c) -> double& { return c.hybrid.rl.gamma; });
    real("tau", [](ExperimentConfig& c) -> double& { return c.hybrid.rl.tau; });
    real("actor_lr", [](ExperimentConfig& c) -> double& { return c.hybrid.rl.actor_lr; });
    real("critic_lr", [](ExperimentConfig& c) -> double& { return c.hybrid.rl.critic_lr; });
    real("policy_noise", [](ExperimentConfig& c) -> double& { return c.hybrid.rl.policy_noise; });
    real("noise_clip", [](ExperimentConfig& c) -> double& { return c.hybrid.rl.noise_clip; });
    real("gradient_budget_scale",
         [](ExperimentConfig& c) -> double& { return c.hybrid.gradient_budget_scale; });
    real("expl_noise", [](ExperimentConfig& c) -> double& { return c.hybrid.expl_noise; });
    real("similarity_tol", [](ExperimentConfig& c) -> double& { return c.hybrid.similarity_tol; });
    return t;
  }();
  return table;
}

void validate(const ExperimentConfig& c) {
  if (c.runs < 1) throw ConfigError("runs", "must be >= 1");
  c.hybrid.validate();
}

}  // namespace

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError(std::string(key), "unknown configuration key");
  it->second(config, key, trim(value));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = line;
    if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    apply_setting(config, trim(l.substr(0, eq)), trim(l.substr(eq + 1)));
  }
  validate(config);
  return config;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

namespace {

// Linear interpolation of field(record) at x over a run sorted by total_steps.
template <typename Field>
double interpolate(const std::vector<RunRecord>& run, double x, Field field) {
  if (x <= static_cast<double>(run.front().total_steps)) return field(run.front());
  auto hi = std::lower_bound(run.begin(), run.end(), x, [](const RunRecord& r, double v) {
    return static_cast<double>(r.total_steps) < v;
  });
  if (hi == run.end()) return field(run.back());
  if (static_cast<double>(hi->total_steps) == x) {
    while (hi + 1 != run.end() && (hi + 1)->total_steps == hi->total_steps) ++hi;
    return field(*hi);
  }
  const auto lo = hi - 1;
  const double x0 = static_cast<double>(lo->total_steps);
  const double x1 = static_cast<double>(hi->total_steps);
  const double w = (x - x0) / (x1 - x0);
  return (1.0 - w) * field(*lo) + w * field(*hi);
}

int generation_at(const std::vector<RunRecord>& run, long x) {
  int g = 0;
  for (const auto& r : run) {
    if (r.total_steps > x) break;
    g = r.generation;
  }
  return g;
}

}  // namespace

AggregateCurve aggregate(const std::vector<std::vector<RunRecord>>& runs, long interval) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  if (interval < 1) throw std::invalid_argument("aggregate: interval must be >= 1");
  long last = -1;
  for (const auto& run : runs) {
    if (run.empty()) throw std::invalid_argument("aggregate: empty run");
    for (std::size_t i = 1; i < run.size(); ++i)
      if (run[i].total_steps < run[i - 1].total_steps)
        throw std::invalid_argument("aggregate: total_steps must be nondecreasing");
    last = last < 0 ? run.back().total_steps : std::min(last, run.back().total_steps);
  }
  std::vector<long> grid;
  for (long x = interval; x <= last; x += interval) grid.push_back(x);
  if (grid.empty()) grid.push_back(last);

  AggregateCurve curve;
  curve.n_runs = static_cast<int>(runs.size());
  std::vector<double> values(runs.size());
  for (long x : grid) {
    CurvePoint p;
    p.total_steps = x;
    p.generation = generation_at(runs.front(), x);
    const auto xd = static_cast<double>(x);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      values[i] = interpolate(runs[i], xd, [](const RunRecord& r) { return r.eval_mean; });
      p.reuse_fraction += interpolate(runs[i], xd, [](const RunRecord& r) { return r.reuse_fraction; });
      p.epsilon += interpolate(runs[i], xd, [](const RunRecord& r) { return r.epsilon; });
      p.generation = std::min(p.generation, generation_at(runs[i], x));
    }
    p.reuse_fraction /= static_cast<double>(runs.size());
    p.epsilon /= static_cast<double>(runs.size());
    p.mean = mean(values);
    p.median = median(values);
    p.ci68 = standard_error(values);
    curve.points.push_back(p);
  }
  return curve;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_number failed");
  return std::string(buf, ptr);
}

namespace {

void append_row(std::string& out, const CurvePoint& p) {
  out += std::to_string(p.total_steps);
  out += ',';
  out += std::to_string(p.generation);
  for (double v : {p.mean, p.median, p.ci68, p.reuse_fraction, p.epsilon}) {
    out += ',';
    out += format_number(v);
  }
  out += '\n';
}

}  // namespace

std::string to_csv(const std::vector<RunRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    CurvePoint p{r.total_steps, r.generation, r.eval_mean,
                 median(r.returns), standard_error(r.returns), r.reuse_fraction, r.epsilon};
    append_row(out, p);
  }
  return out;
}

std::string to_csv(const AggregateCurve& curve) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& p : curve.points) append_row(out, p);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << contents;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void emit_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  write_file(path, to_csv(records));
}

void emit_csv(const AggregateCurve& curve, const std::filesystem::path& path) {
  write_file(path, to_csv(curve));
}

std::vector<CurvePoint> parse_csv(std::string_view text) {
  std::vector<CurvePoint> points;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::invalid_argument("parse_csv: missing header");
  while (std::getline(in, line)) {
    std::vector<std::string_view> cells;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 7) throw std::invalid_argument("parse_csv: expected 7 columns");
    CurvePoint p;
    p.total_steps = parse_number<long>("total_steps", cells[0]);
    p.generation = parse_number<int>("generation", cells[1]);
    p.mean = parse_number<double>("eval_mean", cells[2]);
    p.median = parse_number<double>("eval_median", cells[3]);
    p.ci68 = parse_number<double>("ci68", cells[4]);
    p.reuse_fraction = parse_number<double>("reuse_fraction", cells[5]);
    p.epsilon = parse_number<double>("epsilon", cells[6]);
    points.push_back(p);
  }
  return points;
}

}  // namespace cemrl::harness

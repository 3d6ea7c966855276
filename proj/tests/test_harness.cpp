#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cemrl/errors.hpp"
#include "cemrl/harness.hpp"

using namespace cemrl;
using namespace cemrl::harness;

namespace {

std::vector<RunRecord> constant_run(double value, long last = 20000, long every = 1000) {
  std::vector<RunRecord> run;
  int g = 0;
  for (long s = every; s <= last; s += every) {
    RunRecord r;
    r.total_steps = s;
    r.generation = ++g;
    r.eval_mean = value;
    r.returns = {value};
    run.push_back(r);
  }
  return run;
}

std::string key_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("parse_config defaults") {
  const auto c = parse_config("");
  const auto& h = c.hybrid;
  CHECK(h.rl.actor_lr == 1e-3);
  CHECK(h.rl.critic_lr == 1e-3);
  CHECK(h.rl.gamma == 0.99);
  CHECK(h.rl.tau == 5e-3);
  CHECK(h.pop_size == 10);
  CHECK(h.sigma_init == 1e-3);
  CHECK(h.sigma_end == 1e-5);
  CHECK(h.tau_cem == 0.95);
  CHECK(h.buffer_capacity == 1000000);
  CHECK(h.rl.batch_size == 100);
  CHECK(h.elites() == 5);
  CHECK(h.budget_mode == hybrid::BudgetMode::per_text);
  CHECK(c.runs == 1);
}

TEST_CASE("parse_config values and errors") {
  const auto c = parse_config(
      "# comment\n"
      "algo = td3\n"
      "env=pendulum   # trailing comment\n"
      "actor_hidden = 64, 32\n"
      "importance_mixing = on\n"
      "tau = 0.01\n"
      "runs = 3\n");
  CHECK(c.hybrid.algo == hybrid::Algo::td3);
  CHECK(c.hybrid.env == "pendulum");
  CHECK(c.hybrid.actor_hidden == std::vector<int>{64, 32});
  CHECK(c.hybrid.importance_mixing);
  CHECK(c.hybrid.rl.tau == 0.01);
  CHECK(c.runs == 3);

  CHECK(key_of("pop_size = 7") == "pop_size");
  CHECK(key_of("tau_cem = 1.5") == "tau_cem");
  CHECK(key_of("no_such_key = 1") == "no_such_key");
  CHECK(key_of("max_steps = lots") == "max_steps");
  CHECK(key_of("algo = ppo") == "algo");
  CHECK(key_of("importance_mixing = maybe") == "importance_mixing");
  CHECK(key_of("just some words") == "line 1");
  CHECK(!config_keys().empty());
}

TEST_CASE("statistics helpers") {
  const std::vector<double> v{1.0, 3.0};
  CHECK(mean(v) == 2.0);
  CHECK(median(v) == 2.0);
  CHECK(standard_error(v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(standard_error(std::vector<double>{4.0}) == 0.0);
}

TEST_CASE("aggregate examples") {
  SUBCASE("single run") {
    std::vector<RunRecord> run = constant_run(0.0);
    for (std::size_t i = 0; i < run.size(); ++i) run[i].eval_mean = static_cast<double>(i * i);
    const auto curve = aggregate({run}, 5000);
    REQUIRE(curve.points.size() == 4);
    for (const auto& p : curve.points) {
      CHECK(p.mean == p.median);
      CHECK(p.ci68 == 0.0);
    }
    // step 5000 is the 5th record (index 4)
    CHECK(curve.points[0].mean == 16.0);
  }
  SUBCASE("two constant runs") {
    const auto curve = aggregate({constant_run(1.0), constant_run(3.0)});
    for (const auto& p : curve.points) {
      CHECK(p.mean == 2.0);
      CHECK(p.median == 2.0);
      CHECK(p.ci68 == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  SUBCASE("ten identical runs equal the run") {
    std::vector<RunRecord> run = constant_run(0.0);
    for (std::size_t i = 0; i < run.size(); ++i) run[i].eval_mean = std::sin(static_cast<double>(i));
    const std::vector<std::vector<RunRecord>> runs(10, run);
    const auto one = aggregate({run});
    const auto ten = aggregate(runs);
    REQUIRE(one.points.size() == ten.points.size());
    for (std::size_t i = 0; i < one.points.size(); ++i) {
      CHECK(ten.points[i].mean == doctest::Approx(one.points[i].mean).epsilon(1e-14));
      CHECK(ten.points[i].ci68 == doctest::Approx(0.0).epsilon(1e-14));
    }
  }
  SUBCASE("linear interpolation between records") {
    std::vector<RunRecord> run(2);
    run[0].total_steps = 4000;
    run[0].eval_mean = 0.0;
    run[1].total_steps = 6000;
    run[1].eval_mean = 10.0;
    const auto curve = aggregate({run});
    REQUIRE(curve.points.size() == 1);
    CHECK(curve.points[0].mean == doctest::Approx(5.0));
  }
  SUBCASE("grid never extrapolates past the shortest run") {
    const auto curve = aggregate({constant_run(1.0, 23000), constant_run(2.0, 17000)});
    REQUIRE(!curve.points.empty());
    CHECK(curve.points.back().total_steps == 15000);
    CHECK(curve.n_runs == 2);
  }
  SUBCASE("errors") {
    CHECK_THROWS(aggregate({}));
    CHECK_THROWS(aggregate({std::vector<RunRecord>{}}));
  }
}

TEST_CASE("similarity histogram") {
  std::vector<Vector> same(4, Vector::LinSpaced(20, 0, 1));
  const auto s = similarity_histogram(same, 1e-6);
  CHECK(s.average == 1.0);
  CHECK(s.pairs == 6);
  CHECK(s.bins[9] == 6);

  std::vector<Vector> apart{Vector::Zero(10), Vector::Ones(10)};
  CHECK(similarity_histogram(apart, 1e-6).average == 0.0);
  CHECK(similarity_histogram(apart, 1e-6).bins[0] == 1);

  Vector half = Vector::Zero(10);
  half.tail(5).setOnes();
  CHECK(pair_similarity(Vector::Zero(10), half, 1e-6) == 0.5);

  CHECK_THROWS(similarity_histogram({Vector::Zero(3)}, 1e-6));

  // a fresh continuous sample almost never collides within tol
  const auto d = cem::SearchDistribution::isotropic(Vector::Zero(500), 1e-3, 1e-5, 0.95);
  Rng rng(4);
  CHECK(similarity_histogram(cem::sample_population(d, 10, rng), 1e-6).average < 0.01);
}

TEST_CASE("CSV emission") {
  SUBCASE("header only for no records") {
    CHECK(to_csv(std::vector<RunRecord>{}) == std::string(kCsvHeader) + "\n");
  }
  SUBCASE("three checkpoints, four lines, round trip") {
    std::vector<RunRecord> recs(3);
    for (int i = 0; i < 3; ++i) {
      recs[i].total_steps = 1000 * (i + 1);
      recs[i].generation = i + 1;
      recs[i].eval_mean = -1.0 / 3.0 * (i + 1) + 1e-17;
      recs[i].returns = {0.1 * i, 0.7, -2.0 / 7.0};
      recs[i].reuse_fraction = 0.3;
      recs[i].epsilon = 9.505e-4 * std::pow(0.95, i);
    }
    const std::string text = to_csv(recs);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(text.back() == '\n');
    CHECK(text.find(' ') == std::string::npos);
    const auto parsed = parse_csv(text);
    REQUIRE(parsed.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(parsed[i].total_steps == recs[i].total_steps);
      CHECK(parsed[i].generation == recs[i].generation);
      CHECK(std::abs(parsed[i].mean - recs[i].eval_mean) <= 1e-12);
      CHECK(std::abs(parsed[i].median - 0.1 * i) <= 1e-12);
      CHECK(std::abs(parsed[i].epsilon - recs[i].epsilon) <= 1e-12);
      CHECK(parsed[i].reuse_fraction == 0.3);
    }
  }
  SUBCASE("curves round-trip through a file") {
    const auto curve = aggregate({constant_run(1.25), constant_run(-3.5)});
    const auto path = std::filesystem::temp_directory_path() / "cemrl_test_curve" / "agg.csv";
    emit_csv(curve, path);
    const auto parsed = parse_csv(slurp(path));
    REQUIRE(parsed.size() == curve.points.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      CHECK(parsed[i].mean == curve.points[i].mean);
      CHECK(parsed[i].ci68 == curve.points[i].ci68);
    }
    std::filesystem::remove_all(path.parent_path());
  }
  SUBCASE("numbers use a decimal point and no grouping") {
    CHECK(format_number(1234567.5) == "1234567.5");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-2.0) == "-2");
  }
}

TEST_CASE("same experiment, byte-identical CSV") {
  auto c = parse_config("algo = cem-td3\nmax_steps = 2000\nactor_hidden = 8\ncritic_hidden = 8\nbatch_size = 16");
  const auto a = to_csv(hybrid::run_experiment(c.hybrid, 7));
  const auto b = to_csv(hybrid::run_experiment(c.hybrid, 7));
  CHECK(a == b);
  CHECK(a != to_csv(hybrid::run_experiment(c.hybrid, 8)));
}

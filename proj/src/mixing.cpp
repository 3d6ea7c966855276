#include "cemrl/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cemrl/errors.hpp"

namespace cemrl::mixing {

void GenerationArchive::validate() const {
  for (const auto& ind : individuals) {
    if (!ind.fitness) throw std::invalid_argument("GenerationArchive: unevaluated individual");
    if (ind.genome.size() != dist_snapshot.dim())
      throw DimensionError(
          size_mismatch("GenerationArchive genome", dist_snapshot.dim(), ind.genome.size()));
  }
}

double log_pdf(const cem::SearchDistribution& dist, const Vector& genome) {
  if (genome.size() != dist.dim())
    throw DimensionError(size_mismatch("log_pdf genome", dist.dim(), genome.size()));
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index j = 0; j < genome.size(); ++j) {
    const double var = dist.sigma2[j];
    const double d = genome[j] - dist.mu[j];
    if (var == 0.0) {
      if (d != 0.0) return -std::numeric_limits<double>::infinity();
      continue;
    }
    lp -= 0.5 * (log_two_pi + std::log(var) + d * d / var);
  }
  return lp;
}

double clamped_ratio(double log_ratio) {
  if (std::isnan(log_ratio)) return 0.0;
  constexpr double kMax = 1e300;
  if (log_ratio >= std::log(kMax)) return kMax;
  return std::exp(log_ratio);
}

namespace {

double log_ratio(double lp_num, double lp_den) {
  // -inf / -inf: the genome is impossible under both; never accept.
  if (std::isinf(lp_num) && std::isinf(lp_den)) return -std::numeric_limits<double>::infinity();
  return lp_num - lp_den;
}

cem::Individual fresh(Vector genome) {
  return cem::Individual{std::move(genome), std::nullopt, 0, cem::Origin::sampled};
}

}  // namespace

std::vector<cem::Individual> importance_mix(const GenerationArchive& archive,
                                            const cem::SearchDistribution& new_dist, int n,
                                            Rng& rng, MixStats* stats) {
  MixStats local;
  MixStats& st = stats ? *stats : local;
  st = MixStats{};
  if (n < 1) throw std::invalid_argument("importance_mix: n must be >= 1");
  std::vector<cem::Individual> out;
  out.reserve(n + 1);
  if (archive.empty()) {
    for (auto& g : cem::sample_population(new_dist, n, rng)) out.push_back(fresh(std::move(g)));
    st.filled = n;
    return out;
  }
  archive.validate();
  if (archive.dist_snapshot.dim() != new_dist.dim())
    throw DimensionError(
        size_mismatch("importance_mix distribution", new_dist.dim(), archive.dist_snapshot.dim()));

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const auto& old_dist = archive.dist_snapshot;
  for (int i = 0; i < n; ++i) {
    const double rand1 = uniform(rng);
    const double rand2 = uniform(rng);
    ++st.iterations;

    if (static_cast<std::size_t>(i) < archive.individuals.size()) {
      const auto& old = archive.individuals[i];
      ++st.old_tested;
      const double keep =
          std::min(1.0, clamped_ratio(log_ratio(log_pdf(new_dist, old.genome),
                                                log_pdf(old_dist, old.genome))));
      if (keep > rand1) {
        ++st.old_accepted;
        cem::Individual reused = old;
        reused.origin = cem::Origin::reused;
        reused.env_steps = 0;
        out.push_back(std::move(reused));
      }
    }

    Vector candidate = std::move(cem::sample_population(new_dist, 1, rng).front());
    const double accept = std::max(
        0.0, 1.0 - clamped_ratio(log_ratio(log_pdf(old_dist, candidate),
                                           log_pdf(new_dist, candidate))));
    if (accept > rand2) {
      ++st.fresh_accepted;
      out.push_back(fresh(std::move(candidate)));
    }

    if (out.size() >= static_cast<std::size_t>(n)) break;
  }

  if (out.size() > static_cast<std::size_t>(n)) {
    std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
    st.trimmed = 1;
  }
  if (out.size() < static_cast<std::size_t>(n)) {
    const int missing = n - static_cast<int>(out.size());
    st.filled = missing;
    for (auto& g : cem::sample_population(new_dist, missing, rng)) out.push_back(fresh(std::move(g)));
  }
  return out;
}

std::vector<cem::Individual> mixable_subset(const std::vector<cem::Individual>& pop) {
  std::vector<cem::Individual> out;
  std::copy_if(pop.begin(), pop.end(), std::back_inserter(out),
               [](const cem::Individual& ind) { return ind.origin != cem::Origin::gradient_stepped; });
  return out;
}

}  // namespace cemrl::mixing

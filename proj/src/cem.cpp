#include "cemrl/cem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cemrl/errors.hpp"

namespace cemrl::cem {

SearchDistribution SearchDistribution::isotropic(Vector mu, double sigma_init, double sigma_end,
                                                 double tau_cem) {
  SearchDistribution d;
  d.sigma2 = Vector::Constant(mu.size(), sigma_init);
  d.mu = std::move(mu);
  d.epsilon = sigma_init;
  d.sigma_init = sigma_init;
  d.sigma_end = sigma_end;
  d.tau_cem = tau_cem;
  d.validate();
  return d;
}

void SearchDistribution::validate() const {
  if (mu.size() != sigma2.size())
    throw DimensionError(size_mismatch("SearchDistribution sigma2", mu.size(), sigma2.size()));
  if ((sigma2.array() < 0.0).any())
    throw std::invalid_argument("SearchDistribution: negative variance");
  if (!(sigma_end > 0.0)) throw std::invalid_argument("SearchDistribution: sigma_end must be > 0");
  if (epsilon < sigma_end)
    throw std::invalid_argument("SearchDistribution: epsilon below sigma_end");
  if (!(tau_cem >= 0.0 && tau_cem < 1.0))
    throw std::invalid_argument("SearchDistribution: tau_cem must lie in [0, 1)");
}

std::string to_string(Origin o) {
  switch (o) {
    case Origin::sampled: return "sampled";
    case Origin::gradient_stepped: return "gradient_stepped";
    case Origin::reused: return "reused";
  }
  return "?";
}

WeightScheme parse_weight_scheme(const std::string& name) {
  if (name == "uniform") return WeightScheme::uniform;
  if (name == "log_rank" || name == "log-rank") return WeightScheme::log_rank;
  throw std::invalid_argument("unknown weight scheme '" + name + "'");
}

std::string to_string(WeightScheme s) {
  return s == WeightScheme::uniform ? "uniform" : "log_rank";
}

EliteWeights compute_weights(WeightScheme scheme, int elite_count) {
  if (elite_count < 1) throw std::invalid_argument("compute_weights: elite count must be >= 1");
  EliteWeights w{scheme, elite_count, Vector(elite_count)};
  if (scheme == WeightScheme::uniform) {
    w.lambdas.setConstant(1.0 / elite_count);
    return w;
  }
  const double numerator = std::log(1.0 + elite_count);
  for (int i = 0; i < elite_count; ++i) w.lambdas[i] = numerator / (i + 1);
  w.lambdas /= w.lambdas.sum();
  return w;
}

std::vector<Vector> sample_population(const SearchDistribution& dist, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_population: n must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vector stddev = dist.sigma2.cwiseSqrt();
  std::vector<Vector> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    Vector g(dist.dim());
    for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = dist.mu[j] + stddev[j] * normal(rng);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Vector> select_elites(const std::vector<Individual>& pop, int elite_count) {
  if (elite_count < 1 || static_cast<std::size_t>(elite_count) > pop.size())
    throw std::invalid_argument("select_elites: need 1 <= K_e <= population size");
  for (std::size_t i = 0; i < pop.size(); ++i)
    if (!pop[i].fitness)
      throw std::invalid_argument("select_elites: individual " + std::to_string(i) +
                                  " has not been evaluated");
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return *pop[a].fitness > *pop[b].fitness; });
  std::vector<Vector> elites;
  elites.reserve(elite_count);
  for (int k = 0; k < elite_count; ++k) elites.push_back(pop[order[k]].genome);
  return elites;
}

SearchDistribution update_distribution(const SearchDistribution& dist,
                                       const std::vector<Vector>& elites,
                                       const EliteWeights& weights) {
  if (static_cast<Eigen::Index>(elites.size()) != weights.lambdas.size())
    throw DimensionError(
        size_mismatch("update_distribution elites", weights.lambdas.size(), elites.size()));
  SearchDistribution next = dist;
  next.mu.setZero();
  next.sigma2.setZero();
  for (std::size_t i = 0; i < elites.size(); ++i) {
    if (elites[i].size() != dist.dim())
      throw DimensionError(size_mismatch("update_distribution elite", dist.dim(), elites[i].size()));
    const double lambda = weights.lambdas[static_cast<Eigen::Index>(i)];
    next.mu += lambda * elites[i];
    next.sigma2.array() += lambda * (elites[i] - dist.mu).array().square();
  }
  next.sigma2.array() += dist.epsilon;
  return decay_epsilon(std::move(next));
}

SearchDistribution decay_epsilon(SearchDistribution dist) {
  // Same recurrence written as sigma_end + tau * (epsilon - sigma_end). Near
  // the fixed point rounding stalls a few ulps above sigma_end; snap there.
  const double next = dist.sigma_end + dist.tau_cem * (dist.epsilon - dist.sigma_end);
  dist.epsilon = next < dist.epsilon ? std::max(next, dist.sigma_end) : dist.sigma_end;
  return dist;
}

}  // namespace cemrl::cem

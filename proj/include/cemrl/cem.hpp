#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cemrl/net.hpp"
#include "cemrl/rng.hpp"

namespace cemrl::cem {

/// Diagonal Gaussian search distribution with decaying extra variance.
///
/// `sigma2` already contains the extra variance added by the last update,
/// so sampling uses it as-is.
struct SearchDistribution {
  Vector mu;
  Vector sigma2;
  double epsilon = 1e-3;
  double sigma_init = 1e-3;
  double sigma_end = 1e-5;
  double tau_cem = 0.95;

  /// mu given, every variance and epsilon set to sigma_init.
  static SearchDistribution isotropic(Vector mu, double sigma_init, double sigma_end,
                                      double tau_cem);

  Eigen::Index dim() const { return mu.size(); }
  void validate() const;
};

enum class Origin { sampled, gradient_stepped, reused };

std::string to_string(Origin o);

struct Individual {
  Vector genome;
  std::optional<double> fitness;  // empty until evaluated
  long env_steps = 0;
  Origin origin = Origin::sampled;
};

enum class WeightScheme { uniform, log_rank };

WeightScheme parse_weight_scheme(const std::string& name);
std::string to_string(WeightScheme s);

struct EliteWeights {
  WeightScheme scheme = WeightScheme::log_rank;
  int elite_count = 0;
  Vector lambdas;  // best rank first
};

/// uniform: 1/K_e each. log_rank: proportional to log(1 + K_e) / rank.
EliteWeights compute_weights(WeightScheme scheme, int elite_count);

/// n independent draws mu + sqrt(sigma2) * N(0, 1), coordinate order.
std::vector<Vector> sample_population(const SearchDistribution& dist, int n, Rng& rng);

/// The elite_count fittest genomes, best first. Ties keep population order.
std::vector<Vector> select_elites(const std::vector<Individual>& pop, int elite_count);

/// Applies the elite-weighted mean and diagonal variance updates around the
/// old mean, adds epsilon to every variance, then decays epsilon.
SearchDistribution update_distribution(const SearchDistribution& dist,
                                       const std::vector<Vector>& elites,
                                       const EliteWeights& weights);

/// epsilon <- tau_cem * epsilon + (1 - tau_cem) * sigma_end
SearchDistribution decay_epsilon(SearchDistribution dist);

}  // namespace cemrl::cem

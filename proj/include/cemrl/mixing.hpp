#pragma once

#include <vector>

#include "cemrl/cem.hpp"

namespace cemrl::mixing {

/// Previous generation's evaluated, non-gradient individuals together with
/// the distribution they were drawn from.
struct GenerationArchive {
  std::vector<cem::Individual> individuals;
  cem::SearchDistribution dist_snapshot;

  bool empty() const { return individuals.empty(); }
  void validate() const;
};

/// Diagonal Gaussian log-density under (mu, sigma2).
///
/// A zero-variance coordinate contributes -infinity when the genome is off
/// the mean. On the mean it is treated as a shared point mass and adds 0,
/// which keeps density ratios between two such distributions finite.
double log_pdf(const cem::SearchDistribution& dist, const Vector& genome);

/// exp(log_ratio) clamped to [0, 1e300].
double clamped_ratio(double log_ratio);

/// Counters from one importance_mix call.
struct MixStats {
  int iterations = 0;       // loop passes actually run
  int old_tested = 0;       // archived individuals offered for reuse
  int old_accepted = 0;
  int fresh_accepted = 0;
  int trimmed = 0;
  int filled = 0;
};

/// Draws a generation of exactly n individuals from new_dist, recycling
/// archived ones by rejection sampling on the density ratio.
///
/// Each loop iteration draws two uniforms, then tests the i-th archived
/// individual (kept with probability min(1, p_new / p_old), origin reused,
/// cached fitness kept, zero env steps) and a fresh candidate (kept with
/// probability max(0, 1 - p_old / p_new)). The loop stops once n are
/// collected; one overshoot is trimmed at random, a shortfall is filled with
/// fresh draws. An empty archive degenerates to plain sampling.
std::vector<cem::Individual> importance_mix(const GenerationArchive& archive,
                                            const cem::SearchDistribution& new_dist, int n,
                                            Rng& rng, MixStats* stats = nullptr);

/// Individuals eligible for the archive: everything not gradient-stepped.
std::vector<cem::Individual> mixable_subset(const std::vector<cem::Individual>& pop);

}  // namespace cemrl::mixing

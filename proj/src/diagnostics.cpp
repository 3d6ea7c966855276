#include "cemrl/diagnostics.hpp"

#include <algorithm>
#include <stdexcept>

#include "cemrl/errors.hpp"

namespace cemrl::harness {

double pair_similarity(const Vector& a, const Vector& b, double tol) {
  if (a.size() != b.size()) throw DimensionError(size_mismatch("pair_similarity", a.size(), b.size()));
  if (a.size() == 0) return 1.0;
  const auto shared = ((a - b).array().abs() <= tol).count();
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

Histogram bucket(std::span<const double> values) {
  Histogram h{};
  for (double v : values) {
    const int bin = std::clamp(static_cast<int>(v * 10.0), 0, 9);
    ++h[bin];
  }
  return h;
}

SimilarityHistogram similarity_histogram(const std::vector<Vector>& population, double tol) {
  if (population.size() < 2)
    throw std::invalid_argument("similarity_histogram: need at least two individuals");
  std::vector<double> pairs;
  pairs.reserve(population.size() * (population.size() - 1) / 2);
  for (std::size_t i = 0; i < population.size(); ++i)
    for (std::size_t j = i + 1; j < population.size(); ++j)
      pairs.push_back(pair_similarity(population[i], population[j], tol));
  SimilarityHistogram out;
  out.pairs = static_cast<long>(pairs.size());
  for (double p : pairs) out.average += p;
  out.average /= static_cast<double>(pairs.size());
  out.bins = bucket(pairs);
  return out;
}

}  // namespace cemrl::harness

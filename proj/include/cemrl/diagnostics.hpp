#pragma once

#include <array>
#include <span>
#include <vector>

#include "cemrl/net.hpp"

namespace cemrl::harness {

using Histogram = std::array<long, 10>;

/// Fraction of coordinates where |a_j - b_j| <= tol.
double pair_similarity(const Vector& a, const Vector& b, double tol);

struct SimilarityHistogram {
  double average = 0.0;  // mean over all unordered pairs
  Histogram bins{};      // pairwise similarities bucketed over [0, 1]
  long pairs = 0;
};

/// Population diversity diagnostic. Needs at least two genomes.
SimilarityHistogram similarity_histogram(const std::vector<Vector>& population, double tol);

/// Buckets values in [0, 1] into ten equal bins; 1.0 lands in the last one.
Histogram bucket(std::span<const double> values);

}  // namespace cemrl::harness

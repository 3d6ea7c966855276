#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cemrl {

using Rng = std::mt19937_64;

// Named purposes for independent random streams derived from one run seed.
enum class Stream : std::uint64_t {
  init = 1,
  sampling,
  evaluation,
  reporting,
  learner,
  mixing,
  exploration,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed addressed by (root, purpose, indices...). Streams with different
// addresses are statistically independent and order-free.
inline std::uint64_t derive_seed(std::uint64_t root, Stream purpose,
                                 std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = splitmix64(root ^ splitmix64(static_cast<std::uint64_t>(purpose)));
  for (auto i : indices) h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t root, Stream purpose,
                    std::initializer_list<std::uint64_t> indices = {}) {
  return Rng(derive_seed(root, purpose, indices));
}

}  // namespace cemrl

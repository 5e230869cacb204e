#ifndef TESTALLOC_RNG_H_
#define TESTALLOC_RNG_H_

#include <cstdint>
#include <random>

namespace testalloc {

using Rng = std::mt19937_64;

// Independent stream roles derived from one master seed.
enum class Stream : std::uint64_t {
  kScenario = 1,
  kOutcomes = 2,
  kStrategy = 3,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for (replication, role). Strategies running the same replication get
// identical scenario and outcome streams, which is what pairs them.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                                 Stream role) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ splitmix64(replication + 1));
  return splitmix64(h ^ static_cast<std::uint64_t>(role));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t replication,
                    Stream role) {
  return Rng(derive_seed(master, replication, role));
}

}  // namespace testalloc

#endif  // TESTALLOC_RNG_H_

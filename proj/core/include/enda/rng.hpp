#pragma once

#include <cstdint>
#include <initializer_list>

namespace enda {

// One splitmix64 step. Used as the core generator and as the seed mixer, so
// every random stream in the library is reproducible across platforms (no
// std::*_distribution, whose output is implementation-defined).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic sub-seed derivation: fold each part into the master seed with
// one scramble round per part. Order-sensitive, so (tag, m, r) tuples give
// independent streams for truth, noise and per-replicate prior draws.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = master;
  for (std::uint64_t p : parts) {
    h ^= p + 0x9e3779b97f4a7c15ULL;
    std::uint64_t s = h;
    h = splitmix64_next(s);
  }
  return h;
}

// Stream tags for the experiment seed-splitting scheme:
//   truth draw      derive_seed(seed, {kTruthStream})
//   observation eta derive_seed(seed, {kNoiseStream})
//   prior draw      derive_seed(seed, {kPriorStream, M, replicate})
enum SeedStream : std::uint64_t {
  kTruthStream = 0x01,
  kNoiseStream = 0x02,
  kPriorStream = 0x03,
};

// Minimal self-contained generator. uniform() is strictly inside (0,1) so
// logit/log transforms of draws are always finite. normal() is Box-Muller
// with the paired deviate cached.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // (0,1), 53-bit resolution, never returns an endpoint
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace enda

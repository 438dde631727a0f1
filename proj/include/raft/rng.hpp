#ifndef RAFT_RNG_HPP_
#define RAFT_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace raft {

// Deterministic stream seeding: replicate b of cell c under master seed s
// always sees the same stream, independent of scheduling (threads pull work
// in any order but each task derives its own stream from its indices).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Derives a stream keyed by up to three indices (seed, cell, replicate).
  static RngStream keyed(std::uint64_t seed, std::uint64_t a = 0,
                         std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= b + 0xd1b54a32d192ed03ULL;
    h ^= splitmix64(s);
    s ^= c + 0x8cb92ba72f3d8dd7ULL;
    h ^= splitmix64(s);
    return RngStream(h);
  }

  // Uniform on the open interval (0, 1); safe as a log/quantile argument.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; no spare caching so the draw count per call is fixed.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential() { return -std::log(uniform()); }

  // Integer in [0, m).
  std::uint64_t below(std::uint64_t m) { return engine_() % m; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace raft

#endif  // RAFT_RNG_HPP_

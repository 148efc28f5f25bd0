#pragma once

#include <array>
#include <cstdint>

namespace ebshrink {

// Deterministic splittable random stream. A (seed, stream) pair always yields
// the same draw sequence, independent of platform, thread count, or the order
// in which other streams are consumed. Simulation replicates take
// stream = replicate index so that serial and parallel runs agree.
//
// State is xoshiro256++, seeded from (seed, stream) through splitmix64.
// All distributions are implemented here rather than through
// <random> adaptors, whose output is implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1).
  double uniform();

  // Uniform integer in {0, 1, ..., n-1}; n >= 1.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal();

  // Exponential with rate 1.
  double exponential();

  // Gamma(shape, rate) by Marsaglia-Tsang; shape > 0, rate > 0.
  double gamma(double shape, double rate);

  // Inverse Gaussian with mean mu and shape lambda, by the
  // Michael-Schucany-Haas transform-with-rejection scheme.
  double inverse_gaussian(double mu, double lambda);

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace ebshrink

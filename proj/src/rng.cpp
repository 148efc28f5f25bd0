#include "ebshrink/rng.hpp"

#include <cmath>

#include "ebshrink/errors.hpp"

namespace ebshrink {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  // Fold the stream id into the splitmix64 trajectory so that distinct
  // streams start from decorrelated xoshiro states.
  std::uint64_t x = seed;
  std::uint64_t mixed_stream = stream;
  x ^= splitmix64(mixed_stream);
  for (auto& word : s_) word = splitmix64(x);
  // xoshiro must not start from the all-zero state.
  if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() {
  // 53 random bits, offset by half an ulp to stay strictly inside (0,1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  if (n == 0) throw DomainError("uniform_int: n must be >= 1");
  // Rejection to remove modulo bias.
  const std::uint64_t limit = n * (~0ULL / n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::gamma(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0)
    throw DomainError("gamma: shape and rate must be positive");
  if (shape < 1.0) {
    // Boost: Gamma(a) = Gamma(a+1) * U^{1/a}.
    const double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double RngStream::inverse_gaussian(double mu, double lambda) {
  if (mu <= 0.0 || lambda <= 0.0)
    throw DomainError("inverse_gaussian: mu and lambda must be positive");
  const double z = normal();
  const double y = z * z;
  const double x = mu + 0.5 * mu * mu * y / lambda -
                   0.5 * (mu / lambda) *
                       std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
  if (uniform() <= mu / (mu + x)) return x;
  return mu * mu / x;
}

}  // namespace ebshrink

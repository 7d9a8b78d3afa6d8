#pragma once

// Named seed streams. Every random component draws from its own
// std::mt19937_64 seeded by mixing a parent seed with a stream name and an
// index, so replicates and components can be rerun in isolation.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace ilab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t stream_id(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(parent ^ stream_id(stream)) + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t parent, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(parent, stream, index));
}

/// Uniform integer in [0, n) without the implementation-defined behaviour of
/// std::uniform_int_distribution, so resampling indices are reproducible
/// across standard libraries.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<std::size_t>(x % n);
}

/// Uniform real in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal draw (Marsaglia polar method, one value per call).
inline double standard_normal(Rng& rng) {
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform01(rng) - 1.0;
    v = 2.0 * uniform01(rng) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

/// Poisson draw by sequential inversion; large means fall back to a rounded
/// normal approximation.
inline long poisson(Rng& rng, double mean) {
  if (mean > 200.0) {
    const double x = std::round(mean + std::sqrt(mean) * standard_normal(rng));
    return x < 0.0 ? 0 : static_cast<long>(x);
  }
  const double u = uniform01(rng);
  double p = std::exp(-mean);
  double cdf = p;
  long k = 0;
  while (u >= cdf && p > 0.0) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

}  // namespace ilab

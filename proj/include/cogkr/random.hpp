#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "cogkr/tensor.hpp"

namespace cogkr {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent, order-free streams.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for the stream named `label` under `master`, optionally indexed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t a = 0,
                                    std::uint64_t b = 0) {
  return mix64(mix64(mix64(master ^ fnv1a(label)) ^ a) ^ mix64(b + 0x632be59bd9b4e019ULL));
}

// Uniform in [0, 1) from the top 53 bits; identical across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Inverse-CDF draw from a probability vector.
inline std::size_t sample_categorical(std::span<const Scalar> p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += static_cast<double>(p[i]);
    if (u < acc) return i;
  }
  // Rounding left u above the final partial sum: take the last nonzero entry.
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0) return i;
  return p.size() - 1;
}

}  // namespace cogkr

// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>

namespace epichart {

// Named random substreams. Every model process draws from a fixed stream so
// that adding draws to one process never perturbs the sequence seen by
// another. Draw i on stream s is a pure function of
// (master_seed, realization, s, i) and can be replayed from its coordinates.
enum class Stream : uint32_t {
  kDemographics = 0,
  kTransmission = 1,
  kVaccination = 2,
  kFertility = 3,
  kCompliance = 4,
  kInitialization = 5,
};

inline constexpr std::size_t kStreamCount = 6;

constexpr std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::kDemographics: return "demographics";
    case Stream::kTransmission: return "transmission";
    case Stream::kVaccination: return "vaccination";
    case Stream::kFertility: return "fertility";
    case Stream::kCompliance: return "compliance";
    case Stream::kInitialization: return "initialization";
  }
  return "?";
}

namespace detail {

// SplitMix64 finalizer. Full-avalanche mix; the random-access form
// mix64(base + i * kGolden) is the standard splitmix sequence.
inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline constexpr uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based random source. Holds one draw counter per substream; the
// generator state is never advanced implicitly, so two registries built from
// the same (master_seed, realization) replay identical sequences.
class RngRegistry {
 public:
  RngRegistry(uint64_t master_seed, uint64_t realization)
      : master_(master_seed), realization_(realization) {
    for (std::size_t s = 0; s < kStreamCount; ++s) {
      base_[s] = stream_base(master_seed, realization, s);
      counter_[s] = 0;
    }
  }

  uint64_t master_seed() const { return master_; }
  uint64_t realization() const { return realization_; }

  // Number of draws taken so far on a stream.
  uint64_t draws(Stream s) const { return counter_[index(s)]; }

  // Pure replay: the value draw `i` on stream `s` returns, without touching
  // any counter.
  uint64_t value_at(Stream s, uint64_t i) const {
    return detail::mix64(base_[index(s)] + (i + 1) * detail::kGolden);
  }

  uint64_t next_u64(Stream s) {
    std::size_t k = index(s);
    return detail::mix64(base_[k] + (++counter_[k]) * detail::kGolden);
  }

  // Uniform on [0, 1). 53-bit mantissa.
  double uniform(Stream s) {
    return static_cast<double>(next_u64(s) >> 11) * 0x1.0p-53;
  }

  double uniform(Stream s, double lo, double hi) {
    return lo + (hi - lo) * uniform(s);
  }

  bool bernoulli(Stream s, double p) { return uniform(s) < p; }

  // Exponential with the given hazard rate (mean 1/rate). A non-positive
  // rate has no finite sample and indicates a model bug.
  double exponential(Stream s, double rate) {
    if (!(rate > 0.0)) {
      throw std::invalid_argument("exponential: rate must be > 0");
    }
    // u in [0,1) so 1-u in (0,1]; log1p avoids log(0).
    return -std::log1p(-uniform(s)) / rate;
  }

  // Box-Muller, cosine branch only: fixed two draws per sample.
  double normal(Stream s, double mean, double sd) {
    double u1 = uniform(s);
    double u2 = uniform(s);
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return mean + sd * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Marsaglia-Tsang squeeze for shape >= 1, power boost below 1.
  double gamma(Stream s, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
      throw std::invalid_argument("gamma: shape and scale must be > 0");
    }
    if (shape < 1.0) {
      double u = uniform(s);
      while (u <= 0.0) u = uniform(s);
      return gamma(s, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal(s, 0.0, 1.0);
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform(s);
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return d * v * scale;
      }
    }
  }

  // Index into `weights` proportional to weight. Weights must be
  // non-negative with a positive sum.
  std::size_t categorical(Stream s, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
      total += w;
    }
    if (!(total > 0.0)) {
      throw std::invalid_argument("categorical: weights sum to zero");
    }
    double u = uniform(s) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  static std::size_t index(Stream s) {
    return static_cast<std::size_t>(static_cast<uint32_t>(s));
  }

  static uint64_t stream_base(uint64_t master, uint64_t realization,
                              std::size_t stream) {
    uint64_t h = detail::mix64(master + detail::kGolden);
    h = detail::mix64(h ^ (realization + 0x5851f42d4c957f2dull));
    h = detail::mix64(h ^ ((stream + 1) * 0xda942042e4dd58b5ull));
    return h;
  }

  uint64_t master_;
  uint64_t realization_;
  std::array<uint64_t, kStreamCount> base_{};
  std::array<uint64_t, kStreamCount> counter_{};
};

}  // namespace epichart

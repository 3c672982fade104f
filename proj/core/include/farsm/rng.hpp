#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "farsm/types.hpp"

namespace farsm {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a list of stream coordinates (trial index, purpose tag, ...) into a
/// single stream id.
constexpr std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t acc = 0x243f6a8885a308d3ULL;
  for (auto p : parts) acc = mix64(acc ^ mix64(p));
  return acc;
}

/// A random stream identified by (master_seed, stream_id). Draws depend only
/// on that pair, never on which thread or in which order streams are used.
class SeededRng {
 public:
  SeededRng(std::uint64_t master_seed, std::uint64_t stream)
      : master_seed_(master_seed),
        stream_id_(stream),
        engine_(mix64(master_seed ^ mix64(stream ^ 0x5851f42d4c957f2dULL))) {}

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream() const noexcept { return stream_id_; }

  /// Standard normal.
  double normal() { return normal_(engine_); }

  /// CN(0, 1): independent real and imaginary parts with variance 1/2 each.
  Complex cscg() {
    constexpr double kScale = 0.70710678118654752440;
    const double re = normal();
    const double im = normal();
    return {kScale * re, kScale * im};
  }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  bool bit() { return (engine_() >> 63) != 0; }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace farsm

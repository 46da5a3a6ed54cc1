#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "signa/diffcore/error.hpp"

namespace signa {

enum class RngPurpose : std::uint64_t { init = 1, dropout = 2, mask = 3, split = 4, kmeans = 5, probe = 6 };

constexpr std::string_view to_string(RngPurpose p) {
  switch (p) {
    case RngPurpose::init: return "init";
    case RngPurpose::dropout: return "dropout";
    case RngPurpose::mask: return "mask";
    case RngPurpose::split: return "split";
    case RngPurpose::kmeans: return "kmeans";
    case RngPurpose::probe: return "probe";
  }
  return "unknown";
}

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seedable random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Its seed is splitmix64(splitmix64(seed) ^ purpose ^ splitmix64(substream)),
/// so streams for different purposes never share state. All conversions to
/// reals are done here rather than through <random> distributions, whose
/// algorithms are implementation-defined:
///   - uniform(): top 53 bits of one draw scaled by 2^-53, in [0, 1)
///   - normal(): Box-Muller on two uniforms, cosine branch only
///   - below(n): Lemire's multiply-shift with rejection
class RngStream {
 public:
  RngStream(std::uint64_t seed, RngPurpose purpose, std::uint64_t substream = 0)
      : seed_(seed), purpose_(purpose), substream_(substream), engine_(derive_seed(seed, purpose, substream)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  RngPurpose purpose() const noexcept { return purpose_; }
  std::uint64_t substream() const noexcept { return substream_; }

  /// Independent child stream, e.g. one per evaluation run.
  RngStream fork(std::uint64_t index) const {
    return RngStream(seed_, purpose_, splitmix64(substream_ * 0x100000001b3ULL + index + 1));
  }

  std::uint64_t next_u64() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    // 1 - uniform() lies in (0, 1], keeping log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("RngStream::below(0)");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
      if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  template <typename RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::iter_swap(first + (i - 1), first + j);
    }
  }

 private:
  static std::uint64_t derive_seed(std::uint64_t seed, RngPurpose purpose, std::uint64_t substream) {
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(purpose) ^ splitmix64(substream));
  }

  std::uint64_t seed_;
  RngPurpose purpose_;
  std::uint64_t substream_;
  std::mt19937_64 engine_;
};

}  // namespace signa

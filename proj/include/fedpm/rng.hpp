#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

namespace fedpm {

// Counter-based generator: draw i of a stream is a pure function of
// (key, i), with the key derived by hashing a seed together with a list
// of tags. Any (seed, purpose, client, round, ...) combination therefore
// names its own independent, replayable stream, and regenerating a stream
// gives identical values on every platform -- the integer path uses no
// libm and no std:: distributions.

// Bump if the mixing or key derivation ever changes; serialized artifacts
// depend on the exact sequences.
inline constexpr std::uint64_t kRngVersion = 1;

// Stream purposes. Values are part of the reproducibility contract.
enum StreamTag : std::uint64_t {
  kTagWeights = 1,
  kTagServerScores = 2,
  kTagParticipants = 3,
  kTagClient = 4,
  kTagEval = 5,
  kTagDistill = 6,
  kTagSynthTrain = 7,
  kTagSynthTest = 8,
  kTagPartition = 9,
  kTagDpNoise = 10,
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  static Rng stream(std::uint64_t seed,
                    std::initializer_list<std::uint64_t> tags) {
    std::uint64_t k = detail::mix64(seed + detail::kGolden * kRngVersion);
    for (std::uint64_t t : tags) {
      k = detail::mix64(k ^ (detail::mix64(t + detail::kGolden) + (k << 6) +
                             (k >> 2)));
    }
    return Rng(k);
  }

  std::uint64_t next_u64() {
    return detail::mix64(key_ + detail::kGolden * ++counter_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_unit() < p; }

  // Uniform in [0, bound), unbiased via rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Marsaglia polar method; caches the spare deviate.
  double next_normal(double mean, double stddev) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return mean + stddev * u * f;
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fedpm

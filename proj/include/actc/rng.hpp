#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace actc {

/// What a random stream is used for. Part of the stream key, so the draws
/// feeding regressors, observation noise and quantization never overlap.
enum class Purpose : std::uint64_t {
  regressor = 1,
  noise = 2,
  quantizer = 3,
  init = 4,
  scenario = 5,
  verification = 6,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: output n is a pure function of (key, n).
///
/// Every (seed, run, iteration, agent, purpose) tuple maps to its own key, so
/// a draw never depends on which thread executed which run or on how many
/// draws other agents consumed. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    return splitmix64(key_ ^ splitmix64(++counter_));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() {
    // The distribution object is rebuilt per call so no cached second
    // variate survives between calls; the stream stays replayable.
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(*this);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t run,
                                std::uint64_t iteration, std::uint64_t agent,
                                Purpose purpose) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ run);
  h = splitmix64(h ^ iteration);
  h = splitmix64(h ^ agent);
  return splitmix64(h ^ static_cast<std::uint64_t>(purpose));
}

inline CounterRng make_stream(std::uint64_t seed, std::uint64_t run,
                              std::uint64_t iteration, std::uint64_t agent,
                              Purpose purpose) {
  return CounterRng(stream_key(seed, run, iteration, agent, purpose));
}

}  // namespace actc

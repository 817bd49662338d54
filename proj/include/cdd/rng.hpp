#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace cdd {

/// Counter-based generator: the n-th output is a fixed bijective mix of
/// (key + n * golden_gamma), so any (key, position) is addressable without
/// replaying the sequence. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Stream for one trajectory (or one alpha point, one worker task, ...).
  /// Distinct (master_seed, stream_index) pairs give independent streams.
  static CounterRng for_stream(std::uint64_t master_seed, std::uint64_t stream_index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  double uniform();  ///< [0, 1) with 53 random bits
  double normal();   ///< unit Gaussian

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

}  // namespace cdd

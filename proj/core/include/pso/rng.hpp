#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace pso {

// Counter-based generator: output k is a SplitMix64 finalizer applied to
// key + k * golden_gamma, so streams can be split or skipped freely.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng() = default;
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  double uniform();  // in [0, 1)
  double normal();

  void discard(std::uint64_t n) { counter_ += n; }
  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  // Independent child stream for a named purpose.
  CounterRng split(std::string_view stream_id) const;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

// Named sub-streams of one experiment seed: "up", "down", "noise", "init", "test".
CounterRng stream_for(std::uint64_t experiment_seed, std::string_view stream_id);

}  // namespace pso

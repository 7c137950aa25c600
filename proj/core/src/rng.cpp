#include "pso/rng.hpp"

namespace pso {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double CounterRng::uniform() {
  // 53 high bits -> [0,1)
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() { return gauss_(*this); }

CounterRng CounterRng::split(std::string_view stream_id) const {
  return CounterRng(mix64(key_ ^ mix64(fnv1a64(stream_id))));
}

CounterRng stream_for(std::uint64_t experiment_seed, std::string_view stream_id) {
  return CounterRng(mix64(experiment_seed)).split(stream_id);
}

}  // namespace pso

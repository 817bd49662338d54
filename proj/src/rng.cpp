#include "cdd/rng.hpp"

namespace cdd {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CounterRng CounterRng::for_stream(std::uint64_t master_seed, std::uint64_t stream_index) {
  // Two rounds so that neighbouring seeds and neighbouring indices both decorrelate.
  return CounterRng{mix64(mix64(master_seed + kGamma) ^ (stream_index * 0xd1b54a32d192ed03ULL))};
}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double CounterRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double CounterRng::normal() { return gauss_(*this); }

}  // namespace cdd

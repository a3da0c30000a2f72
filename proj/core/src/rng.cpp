#include "anicemc/rng.hpp"

namespace anicemc {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) noexcept {
  std::uint64_t k = mix64(master + kGoldenGamma);
  k = mix64(k ^ (stream * 0xd1b54a32d192ed03ULL));
  return mix64(k ^ (index * 0xaef17502108ef2d9ULL + kGoldenGamma));
}

StreamRng::result_type StreamRng::operator()() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGoldenGamma);
}

double StreamRng::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double StreamRng::normal() { return normal_(*this); }

}  // namespace anicemc

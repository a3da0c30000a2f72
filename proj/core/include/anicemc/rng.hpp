#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace anicemc {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Deterministic key for stream `stream`, item `index` under `master`.
/// Distinct (stream, index) pairs give unrelated keys.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) noexcept;

/// Counter-based generator: output n is mix64(key + n * golden_gamma).
/// Satisfies UniformRandomBitGenerator, so std distributions can draw from it.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng() = default;
  explicit StreamRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform in [0, 1).
  double uniform() noexcept;
  double normal();
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream identifiers used to derive independent per-purpose keys.
enum class Stream : std::uint64_t {
  ChainInit = 1,
  ChainStep = 2,
  ModelInit = 3,
  Training = 4,
  Bootstrap = 5,
  Evaluation = 6,
  Reference = 7,
};

inline StreamRng make_stream(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return StreamRng(derive_seed(master, static_cast<std::uint64_t>(stream), index));
}

}  // namespace anicemc

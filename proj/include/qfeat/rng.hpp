#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace qfeat {

// Philox4x32-10 counter-based generator. The output is a pure function of
// (key, counter), so streams are reproducible across platforms and threads.
// Satisfies UniformRandomBitGenerator with 64-bit output.
class Philox {
 public:
  using result_type = std::uint64_t;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform double in [0, 1) with 53 bits of resolution.
  double uniform();
  // Standard normal via Box-Muller on uniform() (no cached pair).
  double normal();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  // Raw block for a given counter; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::uint64_t stream_;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

// Mixes a base seed with task coordinates (SplitMix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

// Fixed stream offsets used by the experiment harness.
namespace streams {
inline constexpr std::uint64_t kTrain = 1;
inline constexpr std::uint64_t kValidation = 2;
inline constexpr std::uint64_t kTest = 3;
inline constexpr std::uint64_t kFeaturePool = 4;
inline constexpr std::uint64_t kResample = 5;
inline constexpr std::uint64_t kSplit = 6;
}  // namespace streams

}  // namespace qfeat

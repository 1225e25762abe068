#pragma once

#include <cstdint>
#include <vector>

namespace depthwatch {

// xoshiro256++ seeded through splitmix64. Hand-rolled because std::shuffle
// and the <random> distributions are implementation-defined, and every
// randomized path in this project must reproduce bit-for-bit from a seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Unbiased uniform integer on [0, bound); bound >= 1.
  std::uint64_t bounded(std::uint64_t bound);

  // Standard normal via Box-Muller; the paired value is cached.
  double normal();

  // First `count` entries of a Fisher-Yates pass over {0, .., n-1}.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64_next(std::uint64_t& state);

// Stable substream derivation: (base seed, tag, index) -> child seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index);

namespace seed_tag {
inline constexpr std::uint64_t kHalfspaceDirections = 0x68616c66;  // "half"
inline constexpr std::uint64_t kProjectionSearch = 0x70726f6a;     // "proj"
inline constexpr std::uint64_t kReferenceSample = 0x72656673;      // "refs"
inline constexpr std::uint64_t kIsolationTree = 0x74726565;        // "tree"
inline constexpr std::uint64_t kToyData = 0x746f7964;              // "toyd"
inline constexpr std::uint64_t kFnnInit = 0x666e6e69;              // "fnni"
inline constexpr std::uint64_t kBetaSampler = 0x62657461;          // "beta"
inline constexpr std::uint64_t kMonteCarloRun = 0x6d637275;        // "mcru"
}  // namespace seed_tag

// Salt namespaces so an in-sample row and a stream query with the same
// integer id never share a direction stream.
inline std::uint64_t salt_for_reference_row(std::size_t row) {
  return 2 * static_cast<std::uint64_t>(row);
}
inline std::uint64_t salt_for_query(std::size_t stream_index) {
  return 2 * static_cast<std::uint64_t>(stream_index) + 1;
}

}  // namespace depthwatch

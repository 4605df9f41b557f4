#pragma once

#include <cmath>
#include <cstdint>

namespace qcm {

// Counter-style deterministic random stream built on the splitmix64
// finalizer.  Every (master_seed, stream_index) pair maps to a fixed key;
// the sequence drawn from that key is identical on all platforms, which is
// what makes ensembles and regression vectors bit-reproducible.
//
// Deviate costs are fixed: one uint64 per uniform, exactly two uint64 per
// normal (Box-Muller, cosine branch only).
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key), state_(key) {}

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : RngStream(mix(master_seed, stream_index)) {}

  // Independent substream; (tag, k) namespaces child streams so different
  // consumers of the same parent can never collide.
  RngStream child(std::uint64_t tag, std::uint64_t k) const {
    return RngStream(mix(mix(key_, tag), k));
  }

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return finalize(state_);
  }

  // Uniform on the open interval (0, 1); never returns 0 or 1 so logs are
  // always finite.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_uniform();
  }

  // Standard normal deviate, consuming exactly two uint64 draws.
  double next_normal() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return finalize(a + 0x9E3779B97F4A7C15ULL * (b + 1));
  }

  std::uint64_t key_;
  std::uint64_t state_;
};

// Substream tags used across the codebase (part of the reproducibility
// contract; renumbering breaks frozen regression vectors).
namespace stream_tag {
inline constexpr std::uint64_t kScene = 1;
inline constexpr std::uint64_t kTrialNoise = 2;
inline constexpr std::uint64_t kTrialFit = 3;
inline constexpr std::uint64_t kEnsemble = 4;
inline constexpr std::uint64_t kFitStart = 5;
}  // namespace stream_tag

}  // namespace qcm

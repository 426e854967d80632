#pragma once

#include <cstdint>

namespace riskstab {

// Identifier written into manifests so a rerun can detect scheme drift.
inline constexpr const char* kRngSchemeId = "splitmix64/xoshiro256pp/boxmuller-v1";

// Counter-based stream: the state is derived purely from (seed, hi, lo), so
// work items keyed by e.g. (path, t) draw identical numbers no matter how the
// surrounding loop is scheduled across threads. That property is what makes
// serial and parallel runs byte-identical.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t hi, std::uint64_t lo);

  std::uint64_t next_u64();
  // Uniform on [0, 1), 53-bit mantissa.
  double uniform01();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller; second value of each pair is cached.
  double normal();
  // Uniform integer in [0, n), n >= 1. Unbiased (rejection on the tail).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stand-alone mixer, also used to derive sub-seeds for named purposes.
std::uint64_t mix64(std::uint64_t x);

}  // namespace riskstab

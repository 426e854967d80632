#include "riskstab/rng.hpp"

#include <cmath>
#include <numbers>

namespace riskstab {
namespace {

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

// splitmix64 step (Steele, Lea, Flood 2014). Used only for seeding.
std::uint64_t splitmix_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix_next(s);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t hi, std::uint64_t lo) {
  // Fold the three key words through splitmix64 so that nearby keys give
  // unrelated states, then expand to the 256-bit xoshiro state.
  std::uint64_t k = seed;
  k = mix64(k ^ 0x8f5e1c6d9a3b7042ULL);
  k = mix64(k ^ hi);
  k = mix64(k ^ lo);
  std::uint64_t st = k;
  s_[0] = splitmix_next(st);
  s_[1] = splitmix_next(st);
  s_[2] = splitmix_next(st);
  s_[3] = splitmix_next(st);
  // All-zero state is the one fixed point of xoshiro; splitmix cannot emit
  // four zeros in a row, so no further guard is needed.
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++ (Blackman, Vigna 2018).
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller. u is bounded away from 0 so the log stays finite.
  double u = 0.0;
  do {
    u = uniform01();
  } while (u <= 0x1.0p-60);
  const double v = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u));
  const double theta = 2.0 * std::numbers::pi * v;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // Lemire-style rejection: accept only the bias-free range.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

}  // namespace riskstab

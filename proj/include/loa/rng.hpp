#pragma once

#include <cstdint>

namespace loa {

// 64-bit linear congruential generator shared by the layout generator and
// the baseline agents. Fixed constants keep sequences identical everywhere.
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return state_;
  }

  // Index in [0, count); count must be positive.
  std::uint64_t pick(std::uint64_t count) { return next() % count; }

  // Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace loa

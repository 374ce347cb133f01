#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, purpose tag, indices, counter), so generation order and thread
// schedule never change the output.

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace das {

std::uint64_t splitmix64(std::uint64_t x);

// Derives a stream key from a seed, a purpose tag and up to a few indices.
std::uint64_t derive_key(std::uint64_t seed, std::string_view tag,
                         std::initializer_list<std::uint64_t> indices = {});

class KeyedStream {
 public:
  explicit KeyedStream(std::uint64_t key) : key_(key) {}
  KeyedStream(std::uint64_t seed, std::string_view tag, std::initializer_list<std::uint64_t> indices = {})
      : key_(derive_key(seed, tag, indices)) {}

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal (Box-Muller, both variates used).
  double normal();
  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace das

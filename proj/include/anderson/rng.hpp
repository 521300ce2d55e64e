#pragma once

#include <cstdint>
#include <string_view>

namespace anderson {

// Counter-based randomness. Every draw is a pure function of a key tuple, so
// ensembles are reproducible and independent of evaluation order or thread
// count.

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Hash of an ordered key tuple.
std::uint64_t hash_keys(std::uint64_t a, std::uint64_t b) noexcept;
std::uint64_t hash_keys(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept;
std::uint64_t hash_keys(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) noexcept;

/// FNV-1a of a string, used to turn diagnostic names into stream ids.
std::uint64_t hash_name(std::string_view name) noexcept;

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit word.
double to_unit(std::uint64_t bits) noexcept;

/// A keyed stream: draw i is to_unit(hash(key, i)).
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  double uniform() noexcept { return to_unit(hash_keys(key_, counter_++)); }
  std::uint64_t bits() noexcept { return hash_keys(key_, counter_++); }
  /// Uniform integer in [0, n). Lemire-style multiply-shift; n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace anderson

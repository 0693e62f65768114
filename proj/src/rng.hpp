#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace kms {

/// Seeded generator whose output is identical on every platform.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// The std:: distributions are implementation-defined, so uniform, normal and
/// index draws as well as shuffling are implemented here on top of the raw
/// 64-bit stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal draw (Box-Muller, second variate cached).
  double normal();

  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n);

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent seed for a named substream, so adding a consumer of
/// randomness in one place never shifts the draws seen elsewhere.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

}  // namespace kms

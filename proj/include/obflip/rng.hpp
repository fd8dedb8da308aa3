#pragma once

#include <cstdint>
#include <limits>

namespace obflip {

// SplitMix64 finalizer (Steele, Lea & Flood). Used both as the output
// function of the counter stream and to derive stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t child) noexcept {
  return mix64(parent + kGoldenGamma * (mix64(child) + 1));
}

/*!
 * Counter-based random stream.
 *
 * The i-th output is a pure function of (key, i), so a stream keyed by
 * (seed, draw index) yields the same values regardless of which thread
 * evaluates it or in what order. Satisfies UniformRandomBitGenerator.
 */
class KeyedStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr KeyedStream(std::uint64_t key) noexcept : key_(key) {}

  template <typename... Ids>
  static constexpr KeyedStream from(std::uint64_t seed, Ids... ids) noexcept {
    std::uint64_t key = mix64(seed ^ 0x6a09e667f3bcc908ULL);
    ((key = derive_key(key, static_cast<std::uint64_t>(ids))), ...);
    return KeyedStream(key);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return at(counter_++); }

  constexpr result_type at(std::uint64_t counter) const noexcept {
    return mix64(key_ + kGoldenGamma * (counter + 1));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % bound;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace obflip

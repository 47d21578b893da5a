#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace drmn {

std::uint64_t splitmix64(std::uint64_t& state);

/// xoshiro256** seeded through splitmix64. Every draw helper below consumes
/// a fixed number of raw 64-bit outputs, so streams are reproducible across
/// platforms and compilers:
///   uniform()      1 word  (top 53 bits)
///   normal()       2 words (Box-Muller, the sine half is discarded)
///   below(n)       1+ words (rejection on the biased tail)
///   shuffle(v)     below() per position, Fisher-Yates from the back
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed);
  static Rng from_state(const State& s);
  /// Independent stream keyed by (seed, stream id).
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal(double mean = 0.0, double stddev = 1.0);
  std::uint64_t below(std::uint64_t n);  // [0, n)

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  const State& state() const noexcept { return s_; }

 private:
  Rng() = default;
  State s_{};
};

}  // namespace drmn

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace supcbi {

// Philox4x32-10 counter-based generator. The key is derived from the seed,
// the upper half of the counter holds the stream id, the lower half a block index.
// Everything downstream (uniforms, normals, gamma, Poisson) is implemented here so
// that streams are bit-identical across compilers and standard libraries.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (idx_ >= 2) refill();
    std::uint64_t hi = buf_[2 * idx_], lo = buf_[2 * idx_ + 1];
    ++idx_;
    return (hi << 32) | lo;
  }

  // 53-bit uniform on [0, 1)
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  // uniform on (0, 1)
  double uniform_open() { return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52; }
  double exponential() { return -std::log(uniform_open()); }
  double normal();
  // Gamma with the given shape and scale; shape > 0.
  double gamma(double shape, double scale);
  std::uint64_t poisson(double mean);

  // Independent child stream, a pure function of (this stream, child).
  RandomStream split(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  unsigned idx_ = 2;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace supcbi

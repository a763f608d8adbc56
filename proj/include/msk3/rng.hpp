// Deterministic random number generation.
//
// All stochastic stages draw from an mt19937_64 seeded through derive_seed(),
// which mixes a master seed with stream/index labels in counter mode. Gaussian
// variates use an explicit Box-Muller transform so recorded results do not
// depend on the standard library's normal_distribution algorithm.
#pragma once

#include <cstdint>
#include <random>

#include "msk3/common.hpp"

namespace msk3 {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent sub-seed for (stream, index) under a master seed. Used to give
// every impairment stage of every trial its own generator.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  std::uint64_t z = mix64(master ^ 0x6a09e667f3bcc909ULL);
  z = mix64(z ^ mix64(stream));
  z = mix64(z ^ mix64(index));
  return z;
}

// Stage labels for derive_seed streams.
enum class RngStream : std::uint64_t {
  Bits = 1,
  Awgn = 2,
  Tdl = 3,
  PnTx = 4,
  PnRx = 5,
  Misc = 6,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return (eng_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_u64() { return eng_(); }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is fine here; bias is negligible for n << 2^64
    // and determinism is the requirement, not exact uniformity.
    return eng_() % n;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = two_pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // CN(0, 1): unit total variance, 1/2 per component.
  cd cgaussian() {
    double re = gaussian();
    double im = gaussian();
    return cd(re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0);
  }

  void fill_bits(std::uint8_t* dst, std::size_t n) {
    std::uint64_t word = 0;
    int left = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (left == 0) {
        word = eng_();
        left = 64;
      }
      dst[i] = static_cast<std::uint8_t>(word & 1u);
      word >>= 1;
      --left;
    }
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace msk3

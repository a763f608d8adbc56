// Shared helpers for the unit tests.
#pragma once

#include <vector>

#include "msk3/rng.hpp"
#include "msk3/waveform.hpp"

namespace testutil {

inline std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint8_t> bits(n);
  msk3::Rng rng(seed);
  rng.fill_bits(bits.data(), bits.size());
  return bits;
}

inline msk3::WaveformConfig make_cfg(int k, int l, int e, int n, int n_cp,
                                     bool cp_cont = false, bool sym_cont = false,
                                     double a = 0.0) {
  msk3::WaveformConfig cfg;
  cfg.k = k;
  cfg.l = l;
  cfg.e = e;
  cfg.n = n;
  cfg.n_cp = n_cp;
  cfg.cp_continuity = cp_cont;
  cfg.symbol_continuity = sym_cont;
  cfg.a = a;
  cfg.validate();
  return cfg;
}

// Multi-frame sample stream plus the bits that produced it.
struct Stream {
  std::vector<msk3::cd> samples;
  std::vector<std::uint8_t> bits;
};

inline Stream modulated_stream(const msk3::WaveformConfig& cfg, int frames,
                               std::uint64_t seed) {
  Stream s;
  s.bits = random_bits(static_cast<std::size_t>(frames) * cfg.bits_per_frame(), seed);
  s.samples = msk3::concat_frames(msk3::modulate_frame_stream(s.bits, cfg));
  return s;
}

}  // namespace testutil

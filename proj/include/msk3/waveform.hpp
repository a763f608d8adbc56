// Transmit chain: oversampled phase interpolation, DFT spreading with excess
// band mapping, OFDM modulation with CP, and inter-frame quarter-turn rotation.
#pragma once

#include <span>
#include <vector>

#include "msk3/common.hpp"
#include "msk3/mapping.hpp"

namespace msk3 {

struct WaveformConfig {
  int k = 12;      // in-band subcarriers (symbol-rate bins)
  int l = 1;       // oversampling factor, 1 or 2
  int e = 0;       // excess-band bins, split E/2 per side
  int n = 256;     // IFFT size
  int n_cp = 0;    // cyclic prefix length, samples at IFFT rate
  double a = 0.0;  // interpolation smoothness parameter
  bool cp_continuity = false;
  bool symbol_continuity = false;
  MappingKind mapping = MappingKind::Symmetric;
  int allocation_offset = -1;  // first in-band subcarrier, centered grid; -1 = centered

  void validate() const;
  int dft_size() const { return l * k; }       // K' pre-DFT samples per block
  int mapped_bins() const { return k + e; }    // K'' active grid bins
  int samples_per_frame() const { return n + n_cp; }
  int bits_per_frame() const { return bits_per_block(k, cp_continuity); }
  int first_inband() const {  // centered-grid index of first in-band subcarrier
    return allocation_offset < 0 ? (n - k) / 2 : allocation_offset;
  }
  // Centered-grid index of the allocation center (DC for the default layout).
  int allocation_center() const { return first_inband() + k / 2; }

  // True when symbol instants land on the sample grid and the CP spans a
  // whole number of them, so inter-frame rotation closes phase exactly.
  bool exact_symbol_numerology() const {
    return n % dft_size() == 0 && n_cp % (n / dft_size()) == 0;
  }
};

struct FrameSamples {
  std::vector<cd> samples;  // n_cp + n values, CP first
  int u = 0;                // applied quarter-turn rotation
  double last_phase = 0.0;  // boundary phase cached for the next frame
  bool exact_continuity = false;
  int cp_len = 0;

  std::span<const cd> body() const {
    return std::span<const cd>(samples).subspan(cp_len);
  }
};

// Midpoint phase insertion: output 2K phases, even indices reproduce the
// input, odd index between symbols k and k+1 is
//   phi_k + t(k+1)/2 + a*(t(k) - t(k+2))
// with steps_into-aligned transitions indexed circularly. Equivalent to
// convolving the zero-padded phase increments with [-a, 0, 0.5+a, 1, 0.5+a,
// 0, -a] but free of 2*pi wrap ambiguity.
std::vector<double> interpolate_phases(std::span<const double> phases,
                                       std::span<const Transition> steps_into,
                                       double a);

// Unitary K'-point DFT of the block samples, then the K+E bins around the
// allocation center copied onto the N-bin grid (natural FFT bin order, DC at
// index 0); all other bins zero.
std::vector<cd> dft_spread_and_map(std::span<const cd> block, const WaveformConfig& cfg);

// Unitary N-point inverse FFT plus CP. last_phase is the cyclic boundary
// phase arg(body[0]), the value the trajectory wraps to past the frame end.
FrameSamples ofdm_modulate(std::span<const cd> grid, const WaveformConfig& cfg);

// Quarter-turn rotation minimizing |u*pi/2 - phi_diff| where
// phi_diff = prev_last_phase - arg(samples[0]). Ties prefer smaller |u|,
// then positive u. Rotates CP and body jointly, updates u and last_phase.
void rotate_for_continuity(FrameSamples& frame, double prev_last_phase);

// Full per-block transmit path, no inter-frame rotation applied.
FrameSamples modulate_block(const MskBlock& block, const WaveformConfig& cfg);

// Sequential frame generation; the rotation rule couples consecutive frames.
class StreamModulator {
 public:
  StreamModulator(const WaveformConfig& cfg, const MappingTable& table);
  FrameSamples next(std::span<const std::uint8_t> frame_bits);
  const WaveformConfig& config() const { return cfg_; }

 private:
  WaveformConfig cfg_;
  const MappingTable* table_;
  bool first_ = true;
  double prev_last_ = 0.0;
};

// Maps a whole bit stream (a multiple of bits_per_frame) to frames.
std::vector<FrameSamples> modulate_frame_stream(std::span<const std::uint8_t> bits,
                                                const WaveformConfig& cfg);

// Gray-mapped QPSK through the same DFT-s-OFDM chain; requires l=1, e=0,
// consumes 2K bits per frame, never rotated.
std::vector<FrameSamples> qpsk_reference_frame_stream(std::span<const std::uint8_t> bits,
                                                      const WaveformConfig& cfg);
std::vector<cd> qpsk_map(std::span<const std::uint8_t> bits);

// Natural-order grid bin holding centered-grid index i.
inline int natural_bin(int centered_index, int n) {
  return (centered_index + n / 2) % n;
}

// Natural-order grid bins of the K in-band subcarriers, symbol order
// (DFT frequency -K/2 .. K/2-1).
std::vector<int> inband_bins(const WaveformConfig& cfg);

// Mean in-band energy per symbol (sum of |grid|^2 over in-band bins / K).
double inband_energy_per_symbol(std::span<const cd> grid, const WaveformConfig& cfg);

std::vector<cd> concat_frames(const std::vector<FrameSamples>& frames);

}  // namespace msk3

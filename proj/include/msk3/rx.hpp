// Receive chain: OFDM front end with genie one-tap equalization, in-band
// truncation to symbol rate, and 4-state trellis detection (Viterbi hard,
// BCJR soft) with per-survivor recursive phase-error tracking.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msk3/mapping.hpp"
#include "msk3/waveform.hpp"

namespace msk3 {

struct DetectorConfig {
  enum class Metric { Euclidean, Angular };
  enum class Mode { Coherent, NonCoherent };

  double lambda = 0.0;  // phase tracking step in [0, 1]
  Metric metric = Metric::Euclidean;
  Mode mode = Mode::Coherent;
  bool enforce_equal_endpoints = true;

  void validate() const;
};

// Trellis states are the four symbol phases, indexed in quarter turns:
// state q has phase q*pi/2 (0, pi/2, pi, -pi/2).
inline cd state_symbol(int q) {
  static constexpr std::array<cd, 4> s = {cd(1, 0), cd(0, 1), cd(-1, 0), cd(0, -1)};
  return s[q & 3];
}
inline double state_phase(int q) { return wrap_to_pi((q & 3) * half_pi); }

// Recursive phase-error update: (1-lambda)*delta_prev + lambda*wrap(observed - state).
double track_phase_update(double delta_prev, double observed_phase,
                          double state_phase, double lambda);

struct DetectionResult {
  std::vector<std::uint8_t> bits;
  std::vector<Transition> transitions;       // mapping order
  std::vector<double> survivor_phase_trace;  // delta after each observed symbol
  double path_metric = 0.0;
  int start_state = 0;
  int end_state = 0;
  bool endpoint_ok = true;   // winning path returned to its start state
  bool fallback = false;     // equal-endpoint constraint had to be dropped
  // Per-stage per-state delta estimates (diagnostics dump).
  std::vector<std::array<double, 4>> delta_trace;
};

// Hard detection over one block of K symbol-rate samples. cp_continuous
// selects the framing: when true, the first sample observes the start state
// itself and the final pair is the terminal-table section; when false, all
// K samples are transition-generated from the start state and
// enforce_equal_endpoints does not apply. In coherent mode the trellis
// starts at start_state (0 after genie derotation); non-coherent mode runs
// all four start states and keeps the global best.
DetectionResult viterbi_detect(std::span<const cd> symbols, const DetectorConfig& det,
                               const MappingTable& table, bool cp_continuous,
                               int start_state = 0);

// Soft detection: per-bit log-likelihood ratios ln P(b=1) - ln P(b=0) over
// the same sectioned trellis, log-domain forward/backward. Phase correction
// reuses the per-state forward survivor estimates (frozen for the backward
// pass). noise_variance is the post-frontend per-symbol complex noise
// variance; values below 1e-12 are clamped.
std::vector<double> bcjr_detect(std::span<const cd> symbols, const DetectorConfig& det,
                                const MappingTable& table, bool cp_continuous,
                                double noise_variance, int start_state = 0);

// CP removal, unitary FFT, in-band K-bin extraction, optional one-tap
// equalization against a genie frequency response (MMSE with known noise
// variance, ZF when noise_variance = 0), unitary K-point IDFT, 1/sqrt(L)
// scaling to near-unit symbols. cfr is the N-bin natural-order response.
std::vector<cd> rx_frontend(const FrameSamples& frame, const WaveformConfig& cfg,
                            const std::vector<cd>* cfr = nullptr,
                            double noise_variance = 0.0, double es = 1.0);

// Full-band variant for the 100% excess band case (K + E = L*K): uses all
// L*K mapped bins and returns the L*K pre-DFT sample estimates.
std::vector<cd> rx_frontend_fullband(const FrameSamples& frame,
                                     const WaveformConfig& cfg,
                                     const std::vector<cd>* cfr = nullptr,
                                     double noise_variance = 0.0, double es = 1.0);

// Genie removal of the transmit rotation: multiply by exp(-j*u*pi/2).
// Non-coherent receivers skip this and marginalize the start state instead.
void derotate(std::span<cd> symbols, int u);

}  // namespace msk3

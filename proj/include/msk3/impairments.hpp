// Channel and hardware impairments: AWGN, block-fading tapped delay line,
// oscillator phase noise, and a memoryless modified-Rapp power amplifier.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msk3/common.hpp"

namespace msk3 {

// --- phase noise ---------------------------------------------------------

struct PsdPoint {
  double freq_hz = 0.0;
  double level_dbc_hz = 0.0;  // single-sideband level
};

struct PnModel {
  enum class Kind { Wiener, ShapedPsd };
  Kind kind = Kind::Wiener;
  double linewidth_hz = 0.0;             // Wiener: 3 dB linewidth
  std::vector<PsdPoint> psd;             // ShapedPsd: breakpoints, monotone freq
  double sample_rate_hz = 1.0;

  void validate() const;
  // Per-sample increment variance of the Wiener walk: 2*pi*linewidth*Ts.
  double wiener_step_variance() const { return two_pi * linewidth_hz / sample_rate_hz; }
  bool enabled() const;
};

// Phase trace in radians, trace[0] = 0 for the Wiener kind.
std::vector<double> pn_generate(const PnModel& model, int n_samples, std::uint64_t seed);

// samples[n] *= exp(j*phase[n])
void pn_apply(std::span<cd> samples, std::span<const double> phase);

// --- AWGN ----------------------------------------------------------------

// Adds circular complex Gaussian noise for a target Es/N0 at the receiver
// symbol rate. es is the mean in-band energy per symbol of the signal
// (unitary transforms preserve it); the per-sample noise variance is then
// N0 = es * 10^(-snr_db/10). snr_db = +inf leaves the input untouched.
void awgn_apply(std::span<cd> samples, double snr_db, std::uint64_t seed,
                double es = 1.0);

inline double awgn_noise_variance(double snr_db, double es = 1.0) {
  return std::isinf(snr_db) ? 0.0 : es * db_to_lin(-snr_db);
}

// --- tapped delay line ----------------------------------------------------

struct TdlProfile {
  std::vector<int> delays;           // samples, nonnegative
  std::vector<double> powers_db;     // normalized to 0 dB total
  void validate() const;
  std::vector<double> linear_weights() const;  // sqrt of normalized powers
};

struct TdlResult {
  std::vector<cd> samples;
  // One frequency response (fft_size bins, natural order) per frame under
  // block fading, or a single entry otherwise.
  std::vector<std::vector<cd>> cfr;
};

// Convolves with complex-Gaussian-weighted taps. With block_fading the taps
// are redrawn once per frame of frame_len samples and each frame is
// convolved in isolation (tails discarded at frame edges, CP absorbs the
// spread in normal operation).
TdlResult tdl_apply(std::span<const cd> samples, const TdlProfile& profile,
                    bool block_fading, std::uint64_t seed, int frame_len,
                    int fft_size);

// --- power amplifier ------------------------------------------------------

struct PaModel {
  enum class Kind { Linear, ModifiedRapp };
  Kind kind = Kind::ModifiedRapp;
  double gain = 1.0;       // small-signal gain, linear
  double vsat = 1.0;       // saturation output amplitude
  double p = 2.0;          // AM/AM smoothness
  double ampm_alpha = 0.0; // AM/PM limit shift (rad)
  double ampm_beta = 1.0;  // AM/PM breakpoint (input amplitude, after drive scaling)
  double ampm_q = 4.0;     // AM/PM slope

  void validate() const;
  double am_am(double a_in) const;
  double am_pm(double a_in) const;  // rad
  // Input amplitude whose nominal linear output would reach vsat.
  double input_sat() const { return vsat / gain; }
};

struct PaResult {
  std::vector<cd> samples;
  double drive_scale = 1.0;      // applied input scaling
  double mean_out_power = 0.0;
  double obo_db = 0.0;           // 10*log10(vsat^2 / mean_out_power)
};

// Scales the input so its mean power sits input_backoff_db below the
// saturation drive input_sat()^2, then applies AM/AM and AM/PM per sample.
PaResult pa_apply(std::span<const cd> samples, const PaModel& pa,
                  double input_backoff_db);

}  // namespace msk3

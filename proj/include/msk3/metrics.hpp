// Measurement layer: PAPR CCDF, Welch PSD, normalized occupied bandwidth,
// RF compliance checks, output back-off search, and BER accounting.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msk3/common.hpp"
#include "msk3/impairments.hpp"
#include "msk3/waveform.hpp"

namespace msk3 {

// --- PAPR ------------------------------------------------------------------

enum class PaprBasis { PerSample, PerOfdmSymbol };

struct PaprCcdf {
  std::vector<double> papr_db;  // sorted ascending
  PaprBasis basis = PaprBasis::PerSample;

  std::size_t count() const { return papr_db.size(); }
  // CCDF reading: PAPR threshold exceeded with the given probability,
  // log-linear interpolation between order statistics.
  double value_at_probability(double p) const;
  // CCDF value at a threshold (fraction of samples above it).
  double probability_above(double threshold_db) const;
  static PaprCcdf merge(const PaprCcdf& a, const PaprCcdf& b);
};

// PerSample: |x(n)|^2 over the global mean power. PerOfdmSymbol: per-frame
// peak over that frame's mean power; frame_len must divide the sample count.
PaprCcdf papr_ccdf(std::span<const cd> samples, PaprBasis basis, int frame_len = 0);

// Streaming accumulator so Monte-Carlo trials can merge partial results.
class PaprAccumulator {
 public:
  PaprAccumulator(PaprBasis basis, int frame_len) : basis_(basis), frame_len_(frame_len) {}
  void add(std::span<const cd> samples);
  void merge(const PaprAccumulator& other);
  PaprCcdf finish() const;

 private:
  PaprBasis basis_;
  int frame_len_;
  std::vector<double> values_;   // per-symbol PAPR dB, or per-sample powers
  double power_sum_ = 0.0;
  std::size_t n_samples_ = 0;
};

// --- PSD -------------------------------------------------------------------

struct WelchParams {
  int segment = 4096;     // default 4*N for N=1024 studies
  double overlap = 0.5;   // fraction of segment
  enum class Window { Hann } window = Window::Hann;
};

struct PsdEstimate {
  std::vector<double> freq;    // normalized: K in-band subcarriers span width 1
  std::vector<double> psd_db;  // peak-normalized
  WelchParams params;
  int segments = 0;
  double bin_width = 0.0;      // in normalized frequency units

  // Linear interpolation of psd_db at a normalized frequency.
  double db_at(double f) const;
};

// Welch-averaged periodogram of the frame stream. Frequencies are expressed
// in allocation widths around the allocation center of cfg.
PsdEstimate psd_estimate(std::span<const cd> samples, const WelchParams& params,
                         const WaveformConfig& cfg);

struct ObwResult {
  double bandwidth = 0.0;  // smallest symmetric band, allocation widths
  bool reached = true;     // false: ratio not attainable, bandwidth is a lower bound
};

// Smallest symmetric band around the allocation center containing all but
// 10^(oob_ratio_db/10) of the total power.
ObwResult normalized_obw(const PsdEstimate& psd, double oob_ratio_db);

// --- RF checks ---------------------------------------------------------------

struct RfLimits {
  double aclr_min_db = 31.0;
  double evm_max_pct = 17.5;
  double obw_fraction = 0.99;
  double ibe_limit_db = -25.0;  // flat per-subcarrier mask vs mean in-band power
};

struct RfCheckConfig {
  int channel_bw_sc = 0;  // channel bandwidth in subcarriers; 0 = allocation width
  WelchParams welch;
};

struct RfCheckReport {
  double aclr_db = 0.0;
  double evm_pct = 0.0;
  double obw_occupied = 0.0;      // bandwidth holding obw_fraction, channel widths
  double ibe_worst_db = 0.0;      // worst out-of-allocation bin vs mean in-band
  bool aclr_ok = false;
  bool evm_ok = false;
  bool obw_ok = false;
  bool ibe_ok = false;
  bool pass = false;
  std::string binding;            // first failing requirement, empty when pass
};

// Evaluates ACLR / EVM / OBW / in-band emissions of tx against the aligned
// undistorted reference. Both streams are whole frames under cfg.
RfCheckReport rf_checks(std::span<const cd> tx, std::span<const cd> ideal,
                        const WaveformConfig& cfg, const RfLimits& limits,
                        const RfCheckConfig& check);

// --- OBO search --------------------------------------------------------------

struct OboScan {
  double ibo_start_db = 12.0;  // most backed-off drive
  double ibo_stop_db = -12.0;  // deepest drive
  double grid_step_db = 0.1;
  double refine_step_db = 0.01;
};

struct OboResult {
  double obo_db = 0.0;          // at the last passing drive
  double max_out_power = 0.0;
  double ibo_db = 0.0;          // last passing input backoff
  std::string binding;          // constraint that fails just past the limit
  bool grid_limited = false;    // scan ended without a failure
};

// Increases PA drive until an RF check fails; reports the last passing
// operating point relative to saturation. Throws when even the most
// backed-off drive fails.
OboResult obo_search(std::span<const cd> ideal, const PaModel& pa,
                     const RfLimits& limits, const WaveformConfig& cfg,
                     const RfCheckConfig& check, const OboScan& scan = {});

// --- BER ---------------------------------------------------------------------

struct LinkStats {
  std::uint64_t bits = 0;
  std::uint64_t errors = 0;

  double ber() const { return bits ? static_cast<double>(errors) / bits : 0.0; }
  // Wilson score interval for the error probability.
  std::pair<double, double> wilson(double z = 1.96) const;
  void merge(const LinkStats& o) {
    bits += o.bits;
    errors += o.errors;
  }
};

LinkStats ber_accumulate(std::span<const std::uint8_t> tx_bits,
                         std::span<const std::uint8_t> rx_bits);

}  // namespace msk3

#include "msk3/impairments.hpp"

#include <algorithm>
#include <cmath>

#include "msk3/fft.hpp"
#include "msk3/rng.hpp"

namespace msk3 {

// --- phase noise ---------------------------------------------------------

void PnModel::validate() const {
  require(sample_rate_hz > 0, "sample rate must be positive");
  if (kind == Kind::Wiener) {
    require(linewidth_hz >= 0, "linewidth must be nonnegative");
  } else {
    require(!psd.empty(), "shaped PSD needs at least one breakpoint");
    for (std::size_t i = 0; i + 1 < psd.size(); ++i) {
      require(psd[i].freq_hz < psd[i + 1].freq_hz,
              "PSD breakpoints must be monotone in frequency");
    }
    require(psd.front().freq_hz > 0, "PSD breakpoints must be positive frequencies");
  }
}

bool PnModel::enabled() const {
  return kind == Kind::Wiener ? linewidth_hz > 0 : !psd.empty();
}

namespace {

// Log-log interpolation of the one-sided phase PSD (rad^2/Hz) from
// single-sideband dBc/Hz breakpoints; flat extrapolation outside the table.
double shaped_psd_rad2(const std::vector<PsdPoint>& pts, double f) {
  if (f <= 0) return 0.0;
  double level;
  if (f <= pts.front().freq_hz) {
    level = pts.front().level_dbc_hz;
  } else if (f >= pts.back().freq_hz) {
    level = pts.back().level_dbc_hz;
  } else {
    std::size_t i = 1;
    while (pts[i].freq_hz < f) ++i;
    double lf0 = std::log10(pts[i - 1].freq_hz);
    double lf1 = std::log10(pts[i].freq_hz);
    double t = (std::log10(f) - lf0) / (lf1 - lf0);
    level = pts[i - 1].level_dbc_hz + t * (pts[i].level_dbc_hz - pts[i - 1].level_dbc_hz);
  }
  return 2.0 * db_to_lin(level);  // S_phi one-sided = 2 * SSB level
}

}  // namespace

std::vector<double> pn_generate(const PnModel& model, int n_samples, std::uint64_t seed) {
  model.validate();
  require(n_samples >= 1, "need at least one sample");
  std::vector<double> phase(n_samples, 0.0);
  if (!model.enabled()) return phase;
  Rng rng(seed);

  if (model.kind == PnModel::Kind::Wiener) {
    const double sigma = std::sqrt(model.wiener_step_variance());
    double acc = 0.0;
    for (int i = 1; i < n_samples; ++i) {
      acc += sigma * rng.gaussian();
      phase[i] = acc;
    }
    return phase;
  }

  // ShapedPsd: draw white Gaussian spectrum, weight by sqrt(S(f) * df / 2)
  // per conjugate-symmetric bin pair, inverse transform to a real trace.
  const int n = n_samples;
  const double fs = model.sample_rate_hz;
  const double df = fs / n;
  std::vector<cd> spec(n, cd(0, 0));
  for (int k = 1; k <= n / 2; ++k) {
    double f = k * df;
    // Each conjugate bin pair contributes 4*amp^2 to the trace variance; one
    // bin must carry S(f_k)*df of it.
    double amp = 0.5 * std::sqrt(shaped_psd_rad2(model.psd, f) * df);
    cd w(rng.gaussian(), rng.gaussian());
    spec[k] = amp * w;
    if (k != n / 2) spec[n - k] = std::conj(spec[k]);
    else spec[k] = cd(amp * std::sqrt(2.0) * w.real(), 0.0);  // Nyquist bin real
  }
  // Unitary inverse keeps sum |spec|^2; rescale to make the synthesis match
  // the target density: time-domain variance = sum(S(f_k) * df).
  std::vector<cd> t = fft_inverse(spec);
  const double scale = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) phase[i] = t[i].real() * scale;
  return phase;
}

void pn_apply(std::span<cd> samples, std::span<const double> phase) {
  require(samples.size() == phase.size(), "phase trace length mismatch");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] *= std::polar(1.0, phase[i]);
  }
}

// --- AWGN ----------------------------------------------------------------

void awgn_apply(std::span<cd> samples, double snr_db, std::uint64_t seed, double es) {
  if (std::isinf(snr_db) && snr_db > 0) return;
  require(std::isfinite(snr_db), "SNR must be finite or +inf");
  require(es > 0, "signal energy reference must be positive");
  const double n0 = awgn_noise_variance(snr_db, es);
  const double s = std::sqrt(n0);
  Rng rng(seed);
  for (auto& x : samples) x += s * rng.cgaussian();
}

// --- tapped delay line ----------------------------------------------------

void TdlProfile::validate() const {
  require(!delays.empty() && delays.size() == powers_db.size(),
          "profile needs matching delay/power lists");
  double total = 0.0;
  for (std::size_t i = 0; i < delays.size(); ++i) {
    require(delays[i] >= 0, "tap delays must be nonnegative");
    total += db_to_lin(powers_db[i]);
  }
  require(std::abs(total - 1.0) < 1e-6, "tap powers must sum to 1 in linear scale");
}

std::vector<double> TdlProfile::linear_weights() const {
  std::vector<double> w(powers_db.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sqrt(db_to_lin(powers_db[i]));
  return w;
}

TdlResult tdl_apply(std::span<const cd> samples, const TdlProfile& profile,
                    bool block_fading, std::uint64_t seed, int frame_len,
                    int fft_size) {
  profile.validate();
  require(frame_len > 0 && samples.size() % frame_len == 0,
          "sample count must be a whole number of frames");
  const int max_delay = *std::max_element(profile.delays.begin(), profile.delays.end());
  require(max_delay < frame_len, "tap delay exceeds the frame length");

  const auto weights = profile.linear_weights();
  const int n_frames = block_fading ? static_cast<int>(samples.size() / frame_len) : 1;

  TdlResult res;
  res.samples.assign(samples.size(), cd(0, 0));
  res.cfr.reserve(n_frames);

  Rng rng(seed);
  std::vector<cd> taps(profile.delays.size());
  for (int fr = 0; fr < n_frames; ++fr) {
    for (std::size_t t = 0; t < taps.size(); ++t) {
      taps[t] = weights[t] * rng.cgaussian();
    }
    // Frequency response of the tap vector on the OFDM grid.
    std::vector<cd> imp(fft_size, cd(0, 0));
    for (std::size_t t = 0; t < taps.size(); ++t) {
      imp[profile.delays[t] % fft_size] += taps[t];
    }
    auto h = fft_forward(imp);
    const double scale = std::sqrt(static_cast<double>(fft_size));
    for (auto& v : h) v *= scale;  // plain (non-unitary) DFT of the taps
    res.cfr.push_back(std::move(h));

    const std::size_t begin = block_fading ? fr * frame_len : 0;
    const std::size_t end = block_fading ? begin + frame_len : samples.size();
    for (std::size_t i = begin; i < end; ++i) {
      cd acc(0, 0);
      for (std::size_t t = 0; t < taps.size(); ++t) {
        const std::size_t d = profile.delays[t];
        if (i >= begin + d) acc += taps[t] * samples[i - d];
      }
      res.samples[i] = acc;
    }
  }
  return res;
}

// --- power amplifier ------------------------------------------------------

void PaModel::validate() const {
  require(gain > 0, "gain must be positive");
  require(vsat > 0, "saturation amplitude must be positive");
  require(p > 0, "smoothness must be positive");
  require(ampm_beta > 0, "AM/PM breakpoint must be positive");
  require(ampm_q >= 0, "AM/PM slope must be nonnegative");
}

double PaModel::am_am(double a_in) const {
  if (kind == Kind::Linear) return gain * a_in;
  const double num = gain * a_in;
  return num / std::pow(1.0 + std::pow(num / vsat, 2.0 * p), 1.0 / (2.0 * p));
}

double PaModel::am_pm(double a_in) const {
  if (kind == Kind::Linear || ampm_alpha == 0.0 || a_in <= 0.0) return 0.0;
  const double r = std::pow(a_in / ampm_beta, ampm_q);
  return ampm_alpha * r / (1.0 + r);
}

PaResult pa_apply(std::span<const cd> samples, const PaModel& pa,
                  double input_backoff_db) {
  pa.validate();
  require(!samples.empty(), "empty input");

  double mean_in = 0.0;
  for (const auto& x : samples) mean_in += sqnorm(x);
  mean_in /= samples.size();
  require(mean_in > 0, "zero-power input");

  PaResult res;
  if (pa.kind == PaModel::Kind::Linear) {
    res.drive_scale = 1.0;
    res.samples.assign(samples.begin(), samples.end());
    for (auto& x : res.samples) x *= pa.gain;
  } else {
    const double target_power = pa.input_sat() * pa.input_sat() *
                                db_to_lin(-input_backoff_db);
    res.drive_scale = std::sqrt(target_power / mean_in);
    res.samples.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const cd x = samples[i] * res.drive_scale;
      const double a = std::abs(x);
      if (a == 0.0) {
        res.samples[i] = cd(0, 0);
        continue;
      }
      const double g = pa.am_am(a) / a;
      res.samples[i] = x * std::polar(g, pa.am_pm(a));
    }
  }
  double mean_out = 0.0;
  for (const auto& x : res.samples) mean_out += sqnorm(x);
  mean_out /= res.samples.size();
  res.mean_out_power = mean_out;
  res.obo_db = lin_to_db(pa.vsat * pa.vsat / mean_out);
  return res;
}

}  // namespace msk3

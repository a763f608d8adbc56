#include "msk3/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msk3/fft.hpp"
#include "msk3/rx.hpp"

namespace msk3 {

// --- PAPR ------------------------------------------------------------------

namespace {

std::vector<double> per_symbol_papr(std::span<const cd> samples, int frame_len) {
  require(frame_len > 0 && samples.size() % frame_len == 0,
          "sample count must be a whole number of OFDM symbols");
  const std::size_t n_frames = samples.size() / frame_len;
  std::vector<double> out;
  out.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    double peak = 0.0, mean = 0.0;
    for (int i = 0; i < frame_len; ++i) {
      const double p = sqnorm(samples[f * frame_len + i]);
      peak = std::max(peak, p);
      mean += p;
    }
    mean /= frame_len;
    out.push_back(lin_to_db(peak / mean));
  }
  return out;
}

}  // namespace

double PaprCcdf::value_at_probability(double p) const {
  require(!papr_db.empty(), "empty CCDF");
  require(p > 0.0 && p < 1.0, "probability must be in (0, 1)");
  const std::size_t m = papr_db.size();
  // Midpoint plotting positions: fraction above papr_db[i] is (m - i - 0.5)/m.
  auto prob_at = [&](std::size_t i) { return (m - i - 0.5) / m; };
  if (p >= prob_at(0)) return papr_db.front();
  if (p <= prob_at(m - 1)) return papr_db.back();
  // prob_at is strictly decreasing in i; bracket p and interpolate in log10.
  std::size_t lo = 0, hi = m - 1;
  while (hi - lo > 1) {
    std::size_t mid = (lo + hi) / 2;
    if (prob_at(mid) >= p) lo = mid;
    else hi = mid;
  }
  const double lp0 = std::log10(prob_at(lo));
  const double lp1 = std::log10(prob_at(hi));
  const double t = (std::log10(p) - lp0) / (lp1 - lp0);
  return papr_db[lo] + t * (papr_db[hi] - papr_db[lo]);
}

double PaprCcdf::probability_above(double threshold_db) const {
  require(!papr_db.empty(), "empty CCDF");
  auto it = std::upper_bound(papr_db.begin(), papr_db.end(), threshold_db);
  return static_cast<double>(papr_db.end() - it) / papr_db.size();
}

PaprCcdf PaprCcdf::merge(const PaprCcdf& a, const PaprCcdf& b) {
  require(a.basis == b.basis, "cannot merge CCDFs of different bases");
  PaprCcdf out;
  out.basis = a.basis;
  out.papr_db.reserve(a.papr_db.size() + b.papr_db.size());
  out.papr_db.insert(out.papr_db.end(), a.papr_db.begin(), a.papr_db.end());
  out.papr_db.insert(out.papr_db.end(), b.papr_db.begin(), b.papr_db.end());
  std::sort(out.papr_db.begin(), out.papr_db.end());
  return out;
}

PaprCcdf papr_ccdf(std::span<const cd> samples, PaprBasis basis, int frame_len) {
  require(!samples.empty(), "empty input");
  PaprCcdf ccdf;
  ccdf.basis = basis;
  if (basis == PaprBasis::PerOfdmSymbol) {
    ccdf.papr_db = per_symbol_papr(samples, frame_len);
  } else {
    double mean = 0.0;
    for (const auto& x : samples) mean += sqnorm(x);
    mean /= samples.size();
    ccdf.papr_db.reserve(samples.size());
    for (const auto& x : samples) ccdf.papr_db.push_back(lin_to_db(sqnorm(x) / mean));
  }
  std::sort(ccdf.papr_db.begin(), ccdf.papr_db.end());
  return ccdf;
}

void PaprAccumulator::add(std::span<const cd> samples) {
  if (basis_ == PaprBasis::PerOfdmSymbol) {
    auto v = per_symbol_papr(samples, frame_len_);
    values_.insert(values_.end(), v.begin(), v.end());
  } else {
    values_.reserve(values_.size() + samples.size());
    for (const auto& x : samples) {
      const double p = sqnorm(x);
      values_.push_back(p);
      power_sum_ += p;
    }
  }
  n_samples_ += samples.size();
}

void PaprAccumulator::merge(const PaprAccumulator& other) {
  require(basis_ == other.basis_ && frame_len_ == other.frame_len_,
          "accumulator configuration mismatch");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  power_sum_ += other.power_sum_;
  n_samples_ += other.n_samples_;
}

PaprCcdf PaprAccumulator::finish() const {
  PaprCcdf ccdf;
  ccdf.basis = basis_;
  if (basis_ == PaprBasis::PerOfdmSymbol) {
    ccdf.papr_db = values_;
  } else {
    require(n_samples_ > 0, "empty accumulator");
    const double mean = power_sum_ / n_samples_;
    ccdf.papr_db.reserve(values_.size());
    for (double p : values_) ccdf.papr_db.push_back(lin_to_db(p / mean));
  }
  std::sort(ccdf.papr_db.begin(), ccdf.papr_db.end());
  return ccdf;
}

// --- PSD -------------------------------------------------------------------

PsdEstimate psd_estimate(std::span<const cd> samples, const WelchParams& params,
                         const WaveformConfig& cfg) {
  const int seg = params.segment;
  require(seg >= 16, "segment too short");
  require(static_cast<int>(samples.size()) >= seg, "too few samples for one segment");
  require(params.overlap >= 0.0 && params.overlap < 1.0, "overlap must be in [0, 1)");
  const int hop = std::max(1, static_cast<int>(seg * (1.0 - params.overlap)));

  std::vector<double> win(seg);
  for (int i = 0; i < seg; ++i) {
    win[i] = 0.5 * (1.0 - std::cos(two_pi * i / seg));
  }

  std::vector<double> acc(seg, 0.0);
  std::vector<cd> buf(seg), spec(seg);
  int n_segments = 0;
  for (std::size_t off = 0; off + seg <= samples.size(); off += hop) {
    for (int i = 0; i < seg; ++i) buf[i] = samples[off + i] * win[i];
    fft_forward(buf, spec);
    for (int i = 0; i < seg; ++i) acc[i] += sqnorm(spec[i]);
    ++n_segments;
  }

  PsdEstimate est;
  est.params = params;
  est.segments = n_segments;
  est.freq.resize(seg);
  est.psd_db.resize(seg);

  const double alloc_width = static_cast<double>(cfg.k) / cfg.n;  // cycles/sample
  const double center = (cfg.allocation_center() - cfg.n / 2.0) / cfg.n;
  est.bin_width = (1.0 / seg) / alloc_width;

  double peak = 0.0;
  for (double v : acc) peak = std::max(peak, v);
  require(peak > 0.0, "all-zero input");

  // fftshift, normalize frequency to allocation widths around the center.
  for (int i = 0; i < seg; ++i) {
    const int shifted = (i + seg / 2) % seg;
    const double f_cyc = (i - seg / 2.0) / seg;
    est.freq[i] = (f_cyc - center) / alloc_width;
    const double v = acc[shifted];
    est.psd_db[i] = v > 0.0 ? lin_to_db(v / peak) : -400.0;
  }
  return est;
}

double PsdEstimate::db_at(double f) const {
  require(!freq.empty(), "empty estimate");
  if (f <= freq.front()) return psd_db.front();
  if (f >= freq.back()) return psd_db.back();
  auto it = std::lower_bound(freq.begin(), freq.end(), f);
  const std::size_t hi = it - freq.begin();
  const std::size_t lo = hi - 1;
  const double t = (f - freq[lo]) / (freq[hi] - freq[lo]);
  return psd_db[lo] + t * (psd_db[hi] - psd_db[lo]);
}

ObwResult normalized_obw(const PsdEstimate& psd, double oob_ratio_db) {
  const std::size_t n = psd.freq.size();
  require(n > 0, "empty estimate");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(psd.freq[a]) < std::abs(psd.freq[b]);
  });

  double total = 0.0;
  std::vector<double> lin(n);
  for (std::size_t i = 0; i < n; ++i) {
    lin[i] = db_to_lin(psd.psd_db[i]);
    total += lin[i];
  }
  const double target_out = total * db_to_lin(oob_ratio_db);

  double inside = 0.0;
  for (std::size_t idx : order) {
    const double before = total - inside;
    inside += lin[idx];
    const double after = total - inside;
    if (after <= target_out) {
      const double f = std::abs(psd.freq[idx]);
      const double frac = before > after ? (before - target_out) / (before - after) : 1.0;
      const double edge = std::max(0.0, f - psd.bin_width / 2.0 + frac * psd.bin_width);
      return ObwResult{2.0 * edge, true};
    }
  }
  const double span = 2.0 * (std::abs(psd.freq[order.back()]) + psd.bin_width / 2.0);
  return ObwResult{span, false};
}

// --- RF checks ---------------------------------------------------------------

namespace {

// Integrated linear PSD power over a normalized frequency band.
double band_power(const PsdEstimate& psd, double f_lo, double f_hi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < psd.freq.size(); ++i) {
    if (psd.freq[i] >= f_lo && psd.freq[i] < f_hi) acc += db_to_lin(psd.psd_db[i]);
  }
  return acc;
}

std::vector<FrameSamples> chop_frames(std::span<const cd> samples,
                                      const WaveformConfig& cfg) {
  const int fl = cfg.samples_per_frame();
  require(fl > 0 && samples.size() % fl == 0, "stream is not a whole number of frames");
  std::vector<FrameSamples> frames(samples.size() / fl);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    frames[f].samples.assign(samples.begin() + f * fl, samples.begin() + (f + 1) * fl);
    frames[f].cp_len = cfg.n_cp;
  }
  return frames;
}

}  // namespace

RfCheckReport rf_checks(std::span<const cd> tx, std::span<const cd> ideal,
                        const WaveformConfig& cfg, const RfLimits& limits,
                        const RfCheckConfig& check) {
  require(tx.size() == ideal.size(), "tx and reference must be aligned");
  const int cbw = check.channel_bw_sc > 0 ? check.channel_bw_sc : cfg.k;
  const double cw = static_cast<double>(cbw) / cfg.k;  // channel width, allocation units

  RfCheckReport rep;

  // Spectral checks share one Welch estimate.
  const PsdEstimate psd = psd_estimate(tx, check.welch, cfg);
  const double in_channel = band_power(psd, -cw / 2, cw / 2);
  const double adj_hi = band_power(psd, cw / 2, 3 * cw / 2);
  const double adj_lo = band_power(psd, -3 * cw / 2, -cw / 2);
  const double worst_adj = std::max(adj_hi, adj_lo);
  rep.aclr_db = worst_adj > 0.0 ? lin_to_db(in_channel / worst_adj) : 400.0;
  rep.aclr_ok = rep.aclr_db >= limits.aclr_min_db;

  // OBW: band holding obw_fraction of total power, in channel widths.
  const ObwResult obw = normalized_obw(psd, lin_to_db(1.0 - limits.obw_fraction));
  rep.obw_occupied = obw.bandwidth / cw;
  rep.obw_ok = obw.reached && rep.obw_occupied <= 1.0;

  // EVM through the receive front end, least-squares scalar fit.
  {
    const auto tx_frames = chop_frames(tx, cfg);
    const auto ref_frames = chop_frames(ideal, cfg);
    cd corr(0, 0);
    double ref_pow = 0.0;
    std::vector<std::vector<cd>> rx_syms, ref_syms;
    for (std::size_t f = 0; f < tx_frames.size(); ++f) {
      rx_syms.push_back(rx_frontend(tx_frames[f], cfg));
      ref_syms.push_back(rx_frontend(ref_frames[f], cfg));
      for (std::size_t i = 0; i < rx_syms.back().size(); ++i) {
        corr += std::conj(ref_syms.back()[i]) * rx_syms.back()[i];
        ref_pow += sqnorm(ref_syms.back()[i]);
      }
    }
    require(ref_pow > 0.0, "zero-power reference");
    const cd alpha = corr / ref_pow;
    double err = 0.0, sig = 0.0;
    for (std::size_t f = 0; f < rx_syms.size(); ++f) {
      for (std::size_t i = 0; i < rx_syms[f].size(); ++i) {
        err += sqnorm(rx_syms[f][i] - alpha * ref_syms[f][i]);
        sig += sqnorm(alpha * ref_syms[f][i]);
      }
    }
    rep.evm_pct = 100.0 * std::sqrt(err / sig);
    rep.evm_ok = rep.evm_pct <= limits.evm_max_pct;
  }

  // In-band emissions: per-subcarrier power averaged over frames, worst
  // in-channel bin outside the mapped allocation vs mean in-band bin power.
  {
    const auto tx_frames = chop_frames(tx, cfg);
    std::vector<double> bin_power(cfg.n, 0.0);
    for (const auto& fr : tx_frames) {
      auto spec = fft_forward(fr.body());
      for (int i = 0; i < cfg.n; ++i) bin_power[i] += sqnorm(spec[i]);
    }
    const int center = cfg.allocation_center();
    double inband_mean = 0.0;
    for (int f = -cfg.k / 2; f < cfg.k / 2; ++f) {
      inband_mean += bin_power[natural_bin(center + f, cfg.n)];
    }
    inband_mean /= cfg.k;

    const int half_ch = cbw / 2;
    const int half_alloc = cfg.mapped_bins() / 2;
    double worst = 0.0;
    for (int f = -half_ch; f < half_ch; ++f) {
      if (f >= -half_alloc && f < half_alloc) continue;
      worst = std::max(worst, bin_power[natural_bin(center + f, cfg.n)]);
    }
    rep.ibe_worst_db = (worst > 0.0 && inband_mean > 0.0)
                           ? lin_to_db(worst / inband_mean)
                           : -400.0;
    rep.ibe_ok = rep.ibe_worst_db <= limits.ibe_limit_db;
  }

  rep.pass = rep.aclr_ok && rep.evm_ok && rep.obw_ok && rep.ibe_ok;
  if (!rep.aclr_ok) rep.binding = "aclr";
  else if (!rep.evm_ok) rep.binding = "evm";
  else if (!rep.obw_ok) rep.binding = "obw";
  else if (!rep.ibe_ok) rep.binding = "ibe";
  return rep;
}

// --- OBO search --------------------------------------------------------------

OboResult obo_search(std::span<const cd> ideal, const PaModel& pa,
                     const RfLimits& limits, const WaveformConfig& cfg,
                     const RfCheckConfig& check, const OboScan& scan) {
  require(scan.ibo_start_db > scan.ibo_stop_db, "scan must run toward deeper drive");
  require(scan.grid_step_db > 0 && scan.refine_step_db > 0, "steps must be positive");

  auto evaluate = [&](double ibo) {
    PaResult pr = pa_apply(ideal, pa, ibo);
    RfCheckReport rep = rf_checks(pr.samples, ideal, cfg, limits, check);
    return std::make_pair(pr, rep);
  };

  if (pa.kind == PaModel::Kind::Linear) {
    auto [pr, rep] = evaluate(scan.ibo_stop_db);
    if (!rep.pass) throw std::runtime_error("linear PA fails RF checks: " + rep.binding);
    return OboResult{pr.obo_db, pr.mean_out_power, scan.ibo_stop_db, "", true};
  }

  double last_pass = std::numeric_limits<double>::quiet_NaN();
  PaResult last_pr;
  double first_fail = std::numeric_limits<double>::quiet_NaN();
  std::string binding;

  for (double ibo = scan.ibo_start_db; ibo >= scan.ibo_stop_db - 1e-9;
       ibo -= scan.grid_step_db) {
    auto [pr, rep] = evaluate(ibo);
    if (rep.pass) {
      last_pass = ibo;
      last_pr = pr;
    } else {
      if (std::isnan(last_pass)) {
        throw std::runtime_error("lowest drive already failing: " + rep.binding);
      }
      first_fail = ibo;
      binding = rep.binding;
      break;
    }
  }
  if (std::isnan(first_fail)) {
    return OboResult{last_pr.obo_db, last_pr.mean_out_power, last_pass, "", true};
  }

  while (last_pass - first_fail > scan.refine_step_db) {
    const double mid = 0.5 * (last_pass + first_fail);
    auto [pr, rep] = evaluate(mid);
    if (rep.pass) {
      last_pass = mid;
      last_pr = pr;
    } else {
      first_fail = mid;
      binding = rep.binding;
    }
  }
  return OboResult{last_pr.obo_db, last_pr.mean_out_power, last_pass, binding, false};
}

// --- BER ---------------------------------------------------------------------

std::pair<double, double> LinkStats::wilson(double z) const {
  if (bits == 0) return {0.0, 1.0};
  const double n = static_cast<double>(bits);
  const double p = ber();
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = p + z2 / (2 * n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return {std::max(0.0, (center - half) / denom), std::min(1.0, (center + half) / denom)};
}

LinkStats ber_accumulate(std::span<const std::uint8_t> tx_bits,
                         std::span<const std::uint8_t> rx_bits) {
  require(tx_bits.size() == rx_bits.size(), "bit count mismatch");
  LinkStats st;
  st.bits = tx_bits.size();
  for (std::size_t i = 0; i < tx_bits.size(); ++i) {
    st.errors += (tx_bits[i] != rx_bits[i]) ? 1 : 0;
  }
  return st;
}

}  // namespace msk3

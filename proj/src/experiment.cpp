#include "msk3/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "msk3/fft.hpp"
#include "msk3/iq_io.hpp"
#include "msk3/rng.hpp"

#ifdef MSK3_HAVE_OPENMP
#include <omp.h>
#endif

namespace msk3 {

namespace {

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Papr: return "papr";
    case ExperimentKind::Psd: return "psd";
    case ExperimentKind::Obw: return "obw";
    case ExperimentKind::Obo: return "obo";
    case ExperimentKind::Link: return "link";
  }
  return "?";
}

int even_round(double x) {
  int v = static_cast<int>(std::lround(x));
  return v + (v % 2);
}

WaveformConfig apply_sweep(const WaveformConfig& base, const std::string& axis,
                           double value) {
  WaveformConfig cfg = base;
  if (axis == "prb") {
    const int prb = static_cast<int>(std::lround(value));
    require(prb >= 1, "prb sweep values must be >= 1");
    const double ebw_frac = base.k > 0 ? static_cast<double>(base.e) / base.k : 0.0;
    cfg.k = 12 * prb;
    cfg.e = even_round(ebw_frac * cfg.k);
    if (cfg.e > cfg.l * cfg.k - cfg.k) cfg.e = cfg.l * cfg.k - cfg.k;
  } else if (axis == "ebw_pct") {
    cfg.e = even_round(value * cfg.k / 100.0);
  }
  cfg.validate();
  return cfg;
}

int resolve_threads(int requested) {
#ifdef MSK3_HAVE_OPENMP
  return requested > 0 ? requested : omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

// Constant-envelope tone on the subcarrier at the allocation center.
std::vector<FrameSamples> tone_frame_stream(int n_frames, const WaveformConfig& cfg) {
  std::vector<cd> grid(cfg.n, cd(0, 0));
  grid[natural_bin(cfg.allocation_center(), cfg.n)] = cd(std::sqrt(cfg.k), 0.0);
  std::vector<FrameSamples> frames;
  frames.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) frames.push_back(ofdm_modulate(grid, cfg));
  return frames;
}

struct TrialStream {
  std::vector<FrameSamples> frames;
  std::vector<std::uint8_t> bits;
};

TrialStream make_trial_stream(const ExperimentSpec& spec, const WaveformConfig& cfg,
                              int point, int trial) {
  TrialStream ts;
  if (spec.modulation == "tone") {
    ts.frames = tone_frame_stream(spec.frames_per_trial, cfg);
    return ts;
  }
  const bool qpsk = spec.modulation == "qpsk";
  const int bpf = qpsk ? 2 * cfg.k : cfg.bits_per_frame();
  ts.bits.resize(static_cast<std::size_t>(spec.frames_per_trial) * bpf);
  Rng rng(trial_seed(spec.seed, RngStream::Bits, point, trial));
  rng.fill_bits(ts.bits.data(), ts.bits.size());
  ts.frames = qpsk ? qpsk_reference_frame_stream(ts.bits, cfg)
                   : modulate_frame_stream(ts.bits, cfg);
  return ts;
}

template <typename Fn>
void run_trials(const ExperimentSpec& spec, ExecMode mode, int n, Fn&& body) {
#ifdef MSK3_HAVE_OPENMP
  if (mode == ExecMode::Parallel) {
    const int nt = resolve_threads(spec.threads);
#pragma omp parallel for schedule(dynamic) num_threads(nt)
    for (int t = 0; t < n; ++t) body(t);
    return;
  }
#else
  (void)spec;
  (void)mode;
#endif
  for (int t = 0; t < n; ++t) body(t);
}

// --- papr -------------------------------------------------------------------

void run_papr(const ExperimentSpec& spec, ExecMode mode, ResultRecord& rec) {
  const bool swept = spec.sweep_axis != "none";
  std::vector<double> at_p;

  for (std::size_t pt = 0; pt < spec.sweep_values.size(); ++pt) {
    const WaveformConfig cfg =
        apply_sweep(spec.waveform, spec.sweep_axis, spec.sweep_values[pt]);
    const int frame_len = cfg.samples_per_frame();
    std::vector<PaprAccumulator> partial(
        spec.trials, PaprAccumulator(spec.papr_basis, frame_len));
    run_trials(spec, mode, spec.trials, [&](int t) {
      TrialStream ts = make_trial_stream(spec, cfg, static_cast<int>(pt), t);
      auto stream = concat_frames(ts.frames);
      partial[t].add(stream);
    });
    PaprAccumulator total(spec.papr_basis, frame_len);
    for (const auto& p : partial) total.merge(p);
    PaprCcdf ccdf = total.finish();
    at_p.push_back(ccdf.value_at_probability(spec.papr_probability));

    if (!swept) {
      // Emit the CCDF curve itself: strictly increasing thresholds.
      rec.columns = {"threshold_db", "ccdf"};
      const std::size_t m = ccdf.papr_db.size();
      const std::size_t n_out = std::min<std::size_t>(m, 512);
      double prev = -1e300;
      for (std::size_t i = 0; i < n_out; ++i) {
        const std::size_t idx = i * (m - 1) / (n_out > 1 ? n_out - 1 : 1);
        const double thr = ccdf.papr_db[idx];
        const double p = (m - idx - 0.5) / m;
        if (thr <= prev) continue;
        prev = thr;
        rec.rows.push_back({thr, p});
      }
      break;
    }
    rec.columns = {spec.sweep_axis, "papr_db_at_p", "count"};
    rec.rows.push_back({spec.sweep_values[pt], at_p.back(),
                        static_cast<double>(ccdf.count())});
  }
  rec.meta["papr_probability"] = spec.papr_probability;
  rec.meta["papr_basis"] =
      spec.papr_basis == PaprBasis::PerOfdmSymbol ? "per_ofdm_symbol" : "per_sample";
  rec.meta["papr_db_at_probability"] = at_p;
}

// --- psd / obw ---------------------------------------------------------------

std::vector<cd> generate_stream(const ExperimentSpec& spec, const WaveformConfig& cfg,
                                ExecMode mode, int point) {
  std::vector<std::vector<cd>> partial(spec.trials);
  run_trials(spec, mode, spec.trials, [&](int t) {
    TrialStream ts = make_trial_stream(spec, cfg, point, t);
    partial[t] = concat_frames(ts.frames);
  });
  std::vector<cd> stream;
  for (auto& p : partial) stream.insert(stream.end(), p.begin(), p.end());
  return stream;
}

void run_psd(const ExperimentSpec& spec, ExecMode mode, ResultRecord& rec) {
  require(spec.sweep_values.size() == 1, "psd experiment expects a single point");
  const WaveformConfig cfg = spec.waveform;
  auto stream = generate_stream(spec, cfg, mode, 0);
  PsdEstimate psd = psd_estimate(stream, spec.welch, cfg);
  rec.columns = {"freq_alloc", "psd_db"};
  for (std::size_t i = 0; i < psd.freq.size(); ++i) {
    rec.rows.push_back({psd.freq[i], psd.psd_db[i]});
  }
  rec.meta["segments"] = psd.segments;
  rec.meta["segment_len"] = psd.params.segment;
  rec.meta["exact_symbol_continuity"] = cfg.exact_symbol_numerology();
}

void run_obw(const ExperimentSpec& spec, ExecMode mode, ResultRecord& rec) {
  const WaveformConfig cfg = spec.waveform;
  auto stream = generate_stream(spec, cfg, mode, 0);
  if (spec.pa && spec.pa->kind != PaModel::Kind::Linear) {
    stream = pa_apply(stream, *spec.pa, spec.pa_ibo_db).samples;
  }
  PsdEstimate psd = psd_estimate(stream, spec.welch, cfg);
  rec.columns = {"oob_ratio_db", "obw_alloc", "reached"};
  for (double ratio : spec.sweep_values) {
    ObwResult r = normalized_obw(psd, ratio);
    rec.rows.push_back({ratio, r.bandwidth, r.reached ? 1.0 : 0.0});
  }
  rec.meta["exact_symbol_continuity"] = cfg.exact_symbol_numerology();
}

// --- obo ----------------------------------------------------------------------

void run_obo(const ExperimentSpec& spec, ExecMode mode, ResultRecord& rec) {
  require(spec.pa.has_value(), "obo experiment needs a pa section");
  rec.columns = {"sweep", "k", "ibo_db", "obo_db", "out_power_db", "grid_limited"};
  rec.label_column = "binding";
  for (std::size_t pt = 0; pt < spec.sweep_values.size(); ++pt) {
    const WaveformConfig cfg =
        apply_sweep(spec.waveform, spec.sweep_axis, spec.sweep_values[pt]);
    RfCheckConfig check = spec.rf_check;
    if (check.channel_bw_sc == 0) check.channel_bw_sc = spec.waveform.k;
    check.welch = spec.welch;
    auto stream = generate_stream(spec, cfg, mode, static_cast<int>(pt));
    OboResult res = obo_search(stream, *spec.pa, spec.limits, cfg, check, spec.obo_scan);
    rec.rows.push_back({spec.sweep_values[pt], static_cast<double>(cfg.k), res.ibo_db,
                        res.obo_db, lin_to_db(res.max_out_power),
                        res.grid_limited ? 1.0 : 0.0});
    rec.row_labels.push_back(res.binding);
  }
}

// --- link ----------------------------------------------------------------------

}  // namespace

std::vector<cd> reference_stream(const ExperimentSpec& spec, int point, int trial) {
  const WaveformConfig cfg =
      apply_sweep(spec.waveform, spec.sweep_axis == "snr_db" ? "none" : spec.sweep_axis,
                  spec.sweep_values[static_cast<std::size_t>(point)]);
  return concat_frames(make_trial_stream(spec, cfg, point, trial).frames);
}

std::uint64_t trial_seed(std::uint64_t master, RngStream stage, int point, int trial) {
  const std::uint64_t index =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(point)) << 32) |
      static_cast<std::uint32_t>(trial);
  return derive_seed(master, static_cast<std::uint64_t>(stage), index);
}

LinkStats run_link_trial(const LinkPointConfig& pt, int trial) {
  const ExperimentSpec& spec = *pt.spec;
  const WaveformConfig cfg = apply_sweep(
      spec.waveform, spec.sweep_axis == "snr_db" ? "none" : spec.sweep_axis,
      spec.sweep_values[pt.point_index]);
  const bool qpsk = spec.modulation == "qpsk";
  const int point = pt.point_index;

  TrialStream ts = make_trial_stream(spec, cfg, point, trial);
  const int n_frames = static_cast<int>(ts.frames.size());

  // Mean in-band energy per symbol of the clean signal, for SNR calibration
  // and MMSE weighting.
  double es = 0.0;
  for (const auto& fr : ts.frames) {
    auto spec_f = fft_forward(fr.body());
    es += inband_energy_per_symbol(spec_f, cfg);
  }
  es /= n_frames;

  auto stream = concat_frames(ts.frames);

  if (spec.pa) {
    stream = pa_apply(stream, *spec.pa, spec.pa_ibo_db).samples;
  }
  if (spec.pn_tx && spec.pn_tx->enabled()) {
    auto tr = pn_generate(*spec.pn_tx, static_cast<int>(stream.size()),
                          trial_seed(spec.seed, RngStream::PnTx, point, trial));
    pn_apply(stream, tr);
  }

  TdlResult faded;
  const bool have_tdl = spec.tdl.has_value();
  if (have_tdl) {
    faded = tdl_apply(stream, *spec.tdl, true,
                      trial_seed(spec.seed, RngStream::Tdl, point, trial),
                      cfg.samples_per_frame(), cfg.n);
    stream = std::move(faded.samples);
  }

  const double n0 = awgn_noise_variance(pt.snr_db, es);
  awgn_apply(stream, pt.snr_db, trial_seed(spec.seed, RngStream::Awgn, point, trial),
             es);

  if (spec.pn_rx && spec.pn_rx->enabled()) {
    auto tr = pn_generate(*spec.pn_rx, static_cast<int>(stream.size()),
                          trial_seed(spec.seed, RngStream::PnRx, point, trial));
    pn_apply(stream, tr);
  }

  const MappingTable& table = cfg.mapping == MappingKind::Symmetric
                                  ? MappingTable::symmetric()
                                  : MappingTable::non_symmetric();
  const int bpf = qpsk ? 2 * cfg.k : cfg.bits_per_frame();
  const int frame_len = cfg.samples_per_frame();
  const double n0_sym = n0 / cfg.l;

  LinkStats stats;
  std::vector<std::uint8_t> hard;
  for (int f = 0; f < n_frames; ++f) {
    FrameSamples fr;
    fr.cp_len = cfg.n_cp;
    fr.samples.assign(stream.begin() + static_cast<std::size_t>(f) * frame_len,
                      stream.begin() + static_cast<std::size_t>(f + 1) * frame_len);
    const std::vector<cd>* h = have_tdl ? &faded.cfr[f] : nullptr;
    auto syms = rx_frontend(fr, cfg, h, n0, es);

    hard.clear();
    if (qpsk) {
      hard.reserve(syms.size() * 2);
      for (const auto& s : syms) {
        hard.push_back(s.real() < 0 ? 1 : 0);
        hard.push_back(s.imag() < 0 ? 1 : 0);
      }
    } else {
      if (spec.detector.mode == DetectorConfig::Mode::Coherent &&
          spec.genie_derotation) {
        derotate(syms, ts.frames[f].u);
      }
      if (spec.algorithm == "bcjr") {
        auto llrs = bcjr_detect(syms, spec.detector, table, cfg.cp_continuity, n0_sym);
        hard.reserve(llrs.size());
        for (double l : llrs) hard.push_back(l > 0 ? 1 : 0);
        if (pt.llr_sink) {
          pt.llr_sink->insert(pt.llr_sink->end(), llrs.begin(), llrs.end());
        }
      } else {
        auto det = viterbi_detect(syms, spec.detector, table, cfg.cp_continuity);
        hard = std::move(det.bits);
        if (pt.delta_sink) {
          pt.delta_sink->insert(pt.delta_sink->end(),
                                det.survivor_phase_trace.begin(),
                                det.survivor_phase_trace.end());
        }
      }
    }
    stats.merge(ber_accumulate(
        std::span<const std::uint8_t>(ts.bits).subspan(
            static_cast<std::size_t>(f) * bpf, bpf),
        hard));
  }
  return stats;
}

namespace {

void run_link(const ExperimentSpec& spec, ExecMode mode, ResultRecord& rec) {
  require(spec.modulation != "tone", "link experiment needs a data modulation");
  rec.columns = {"snr_db", "bits", "errors", "ber", "wilson_lo", "wilson_hi"};
  for (std::size_t pt = 0; pt < spec.sweep_values.size(); ++pt) {
    LinkPointConfig lp{&spec, spec.sweep_values[pt], static_cast<int>(pt)};
    std::vector<LinkStats> partial(spec.trials);
    run_trials(spec, mode, spec.trials, [&](int t) { partial[t] = run_link_trial(lp, t); });
    LinkStats total;
    for (const auto& p : partial) total.merge(p);
    auto [lo, hi] = total.wilson();
    rec.rows.push_back({spec.sweep_values[pt], static_cast<double>(total.bits),
                        static_cast<double>(total.errors), total.ber(), lo, hi});
  }
}

}  // namespace

void ExperimentSpec::validate() const {
  waveform.validate();
  detector.validate();
  require(!sweep_values.empty(), "sweep must be nonempty");
  require(trials >= 1, "trial count must be >= 1");
  require(frames_per_trial >= 1, "frames_per_trial must be >= 1");
  require(modulation == "msk3" || modulation == "qpsk" || modulation == "tone",
          "modulation must be msk3, qpsk or tone");
  require(algorithm == "viterbi" || algorithm == "bcjr",
          "algorithm must be viterbi or bcjr");
  if (modulation == "qpsk") {
    require(waveform.l == 1 && waveform.e == 0, "qpsk reference runs at L=1, E=0");
  }
}

ExperimentSpec parse_experiment(const json& j, ExperimentKind kind) {
  ExperimentSpec spec;
  spec.kind = kind;
  spec.raw = j;
  if (j.contains("waveform")) spec.waveform = parse_waveform(j["waveform"]);
  spec.modulation = j.value("modulation", spec.modulation);
  if (j.contains("detector")) spec.detector = parse_detector(j["detector"]);
  spec.algorithm = j.contains("detector")
                       ? j["detector"].value("algorithm", spec.algorithm)
                       : spec.algorithm;
  spec.genie_derotation = j.value("genie_derotation", spec.genie_derotation);

  if (j.contains("impairments")) {
    const json& imp = j["impairments"];
    if (imp.contains("pa")) {
      spec.pa = parse_pa(imp["pa"]);
      spec.pa_ibo_db = imp["pa"].value("ibo_db", spec.pa_ibo_db);
    }
    if (imp.contains("pn_tx")) spec.pn_tx = parse_pn(imp["pn_tx"]);
    if (imp.contains("pn_rx")) spec.pn_rx = parse_pn(imp["pn_rx"]);
    if (imp.contains("tdl")) spec.tdl = parse_tdl(imp["tdl"]);
  }

  if (j.contains("sweep")) {
    spec.sweep_axis = j["sweep"].value("axis", "none");
    if (j["sweep"].contains("values")) {
      spec.sweep_values.clear();
      for (const auto& v : j["sweep"]["values"]) {
        spec.sweep_values.push_back(v.get<double>());
      }
    }
  }
  spec.trials = j.value("trials", spec.trials);
  spec.frames_per_trial = j.value("frames_per_trial", spec.frames_per_trial);
  spec.seed = j.value("seed", spec.seed);
  spec.threads = j.value("threads", spec.threads);
  spec.out = j.value("out", spec.out);

  if (j.contains("papr")) {
    const json& p = j["papr"];
    const std::string basis = p.value("basis", "per_ofdm_symbol");
    if (basis == "per_sample") spec.papr_basis = PaprBasis::PerSample;
    else if (basis == "per_ofdm_symbol") spec.papr_basis = PaprBasis::PerOfdmSymbol;
    else fail("papr basis must be per_sample or per_ofdm_symbol");
    spec.papr_probability = p.value("probability", spec.papr_probability);
  }
  if (j.contains("welch")) spec.welch = parse_welch(j["welch"]);
  if (j.contains("limits")) spec.limits = parse_rf_limits(j["limits"]);
  if (j.contains("rf_check")) {
    spec.rf_check.channel_bw_sc = j["rf_check"].value("channel_bw_sc", 0);
  }
  if (j.contains("obo_scan")) {
    const json& s = j["obo_scan"];
    spec.obo_scan.ibo_start_db = s.value("ibo_start_db", spec.obo_scan.ibo_start_db);
    spec.obo_scan.ibo_stop_db = s.value("ibo_stop_db", spec.obo_scan.ibo_stop_db);
    spec.obo_scan.grid_step_db = s.value("grid_step_db", spec.obo_scan.grid_step_db);
    spec.obo_scan.refine_step_db = s.value("refine_step_db", spec.obo_scan.refine_step_db);
  }
  spec.validate();
  return spec;
}

std::string build_id_string() {
#if defined(__GNUC__) && !defined(__clang__)
  return "msk3sim 0.1.0 gcc-" + std::to_string(__GNUC__) + "." +
         std::to_string(__GNUC_MINOR__);
#elif defined(__clang__)
  return "msk3sim 0.1.0 clang-" + std::to_string(__clang_major__);
#else
  return "msk3sim 0.1.0";
#endif
}

ResultRecord run_experiment(const ExperimentSpec& spec, ExecMode mode) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();

  ResultRecord rec;
  rec.experiment = kind_name(spec.kind);
  rec.config_hash = config_hash(spec.raw);
  rec.build_id = build_id_string();
  rec.meta = json::object();

  switch (spec.kind) {
    case ExperimentKind::Papr: run_papr(spec, mode, rec); break;
    case ExperimentKind::Psd: run_psd(spec, mode, rec); break;
    case ExperimentKind::Obw: run_obw(spec, mode, rec); break;
    case ExperimentKind::Obo: run_obo(spec, mode, rec); break;
    case ExperimentKind::Link: run_link(spec, mode, rec); break;
  }

  rec.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void write_csv(const ResultRecord& rec, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  for (std::size_t c = 0; c < rec.columns.size(); ++c) {
    out << (c ? "," : "") << rec.columns[c];
  }
  if (!rec.label_column.empty()) out << "," << rec.label_column;
  out << "\n";
  for (std::size_t r = 0; r < rec.rows.size(); ++r) {
    for (std::size_t c = 0; c < rec.rows[r].size(); ++c) {
      out << (c ? "," : "") << fmt_double(rec.rows[r][c]);
    }
    if (!rec.label_column.empty()) {
      out << "," << (r < rec.row_labels.size() ? rec.row_labels[r] : "");
    }
    out << "\n";
  }
  require(out.good(), "write failed: " + path);
}

void write_json_report(const ResultRecord& rec, const std::string& path) {
  json j;
  j["experiment"] = rec.experiment;
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(rec.config_hash));
  j["config_hash"] = hash;
  j["build"] = rec.build_id;
  j["runtime_s"] = rec.runtime_s;
  j["columns"] = rec.columns;
  j["rows"] = rec.rows;
  if (!rec.label_column.empty()) {
    j["label_column"] = rec.label_column;
    j["row_labels"] = rec.row_labels;
  }
  j["meta"] = rec.meta;
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  require(out.good(), "write failed: " + path);
}

}  // namespace msk3

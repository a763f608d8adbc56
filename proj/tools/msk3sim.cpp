// Command-line front end: runs an experiment described by a JSON config and
// writes CSV + JSON reports, with optional IQ / soft-output dumps.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "msk3/experiment.hpp"
#include "msk3/fft.hpp"
#include "msk3/iq_io.hpp"
#include "msk3/mapping.hpp"
#include "msk3/rng.hpp"

namespace {

using namespace msk3;

struct CmdOpts {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int trials = 0;
  int threads = 0;
  bool serial = false;
  std::string dump_iq;
  std::string dump_llr;
  std::string dump_diag;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* trials_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common_options(CLI::App* cmd, CmdOpts& o, bool link_extras) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  o.seed_opt = cmd->add_option("--seed", o.seed, "master seed override");
  o.out_opt = cmd->add_option("--out", o.out, "output path stem override");
  o.trials_opt = cmd->add_option("--trials", o.trials, "trial count override");
  o.threads_opt =
      cmd->add_option("--threads", o.threads, "worker threads (0: runtime default)");
  cmd->add_flag("--serial", o.serial, "run the serial reference implementation");
  cmd->add_option("--dump-iq", o.dump_iq,
                  "write the clean trial-0 sample stream to <stem>.f64le and <stem>.csv");
  if (link_extras) {
    cmd->add_option("--dump-llr", o.dump_llr,
                    "write trial-0 soft outputs (bit_index,llr CSV)");
    cmd->add_option("--dump-diag", o.dump_diag,
                    "write trial-0 tracked phase offsets (stage,delta CSV)");
  }
}

int env_threads() {
  if (const char* s = std::getenv("MSK3SIM_THREADS")) {
    const int v = std::atoi(s);
    if (v > 0) return v;
  }
  return 0;
}

void print_summary(const ResultRecord& rec, const std::string& stem) {
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(rec.config_hash));
  std::cout << rec.experiment << ": " << rec.rows.size() << " rows in "
            << rec.runtime_s << " s (config " << hash << ")\n";
  const std::size_t show = rec.rows.size() <= 24 ? rec.rows.size() : 8;
  if (show) {
    for (std::size_t c = 0; c < rec.columns.size(); ++c) {
      std::cout << (c ? "," : "  ") << rec.columns[c];
    }
    if (!rec.label_column.empty()) std::cout << "," << rec.label_column;
    std::cout << "\n";
  }
  for (std::size_t r = 0; r < show; ++r) {
    for (std::size_t c = 0; c < rec.rows[r].size(); ++c) {
      std::cout << (c ? "," : "  ") << rec.rows[r][c];
    }
    if (!rec.label_column.empty() && r < rec.row_labels.size()) {
      std::cout << "," << rec.row_labels[r];
    }
    std::cout << "\n";
  }
  if (show < rec.rows.size()) {
    std::cout << "  ... (" << rec.rows.size() - show << " more rows)\n";
  }
  std::cout << "wrote " << stem << ".csv, " << stem << ".json\n";
}

int run_cmd(ExperimentKind kind, const CmdOpts& o) {
  json cfg = load_config_json(o.config);
  if (*o.seed_opt) cfg["seed"] = o.seed;
  if (*o.trials_opt) cfg["trials"] = o.trials;

  ExperimentSpec spec = parse_experiment(cfg, kind);
  if (*o.threads_opt) {
    spec.threads = o.threads;
  } else if (spec.threads == 0) {
    spec.threads = env_threads();
  }
  if (*o.out_opt) spec.out = o.out;

  ResultRecord rec =
      run_experiment(spec, o.serial ? ExecMode::Serial : ExecMode::Parallel);
  write_csv(rec, spec.out + ".csv");
  write_json_report(rec, spec.out + ".json");
  print_summary(rec, spec.out);

  if (!o.dump_iq.empty()) {
    auto stream = reference_stream(spec, 0, 0);
    write_iq_f64le(o.dump_iq + ".f64le", stream);
    write_iq_csv(o.dump_iq + ".csv", stream);
    std::cout << "wrote " << o.dump_iq << ".f64le, " << o.dump_iq << ".csv ("
              << stream.size() << " samples)\n";
  }
  if (!o.dump_llr.empty() || !o.dump_diag.empty()) {
    ExperimentSpec probe = spec;
    std::vector<double> llrs, deltas;
    LinkPointConfig lp{&probe, spec.sweep_values[0], 0, &llrs, &deltas};
    if (!o.dump_llr.empty()) {
      probe.algorithm = "bcjr";
      run_link_trial(lp, 0);
      write_llr_csv(o.dump_llr, llrs);
      std::cout << "wrote " << o.dump_llr << " (" << llrs.size() << " soft outputs)\n";
    }
    if (!o.dump_diag.empty()) {
      probe.algorithm = "viterbi";
      run_link_trial(lp, 0);
      std::ofstream f(o.dump_diag);
      f << "stage,delta\n";
      for (std::size_t i = 0; i < deltas.size(); ++i) {
        f << i << "," << deltas[i] << "\n";
      }
      std::cout << "wrote " << o.dump_diag << " (" << deltas.size() << " stages)\n";
    }
  }
  return 0;
}

// --- selftest -----------------------------------------------------------------

bool check(const char* name, bool ok) {
  std::cout << (ok ? "[ ok ] " : "[FAIL] ") << name << "\n";
  return ok;
}

bool st_mapping_roundtrip() {
  for (bool sym : {true, false}) {
    const MappingTable& t = sym ? MappingTable::symmetric() : MappingTable::non_symmetric();
    for (bool cp : {false, true}) {
      Rng rng(7);
      std::vector<std::uint8_t> bits(bits_per_block(24, cp));
      rng.fill_bits(bits.data(), bits.size());
      MskBlock blk = map_bits(bits, t, cp);
      for (std::size_t j = 0; j + 1 < blk.transitions.size(); j += 2) {
        if (sym && blk.transitions[j] == Transition::Zero &&
            blk.transitions[j + 1] == Transition::Zero) {
          return false;
        }
      }
      if (demap_transitions(blk.transitions, t, cp) != bits) return false;
    }
  }
  return true;
}

bool st_constant_envelope() {
  WaveformConfig cfg;
  cfg.k = 16; cfg.l = 1; cfg.e = 0; cfg.n = 256; cfg.n_cp = 16;
  Rng rng(11);
  std::vector<std::uint8_t> bits(cfg.bits_per_frame());
  rng.fill_bits(bits.data(), bits.size());
  MskBlock blk = map_bits(bits, MappingTable::symmetric(), cfg.cp_continuity);
  for (const auto& s : blk.symbols) {
    if (std::abs(std::abs(s) - 1.0) > 1e-15) return false;
  }
  // The DFT/IFFT path preserves the envelope exactly at symbol instants.
  auto frames = modulate_frame_stream(bits, cfg);
  auto body = frames[0].body();
  const double ref = std::sqrt(double(cfg.k) / cfg.n);
  for (int i = 0; i < cfg.k; ++i) {
    if (std::abs(std::abs(body[static_cast<std::size_t>(i) * (cfg.n / cfg.k)]) - ref) >
        1e-12) {
      return false;
    }
  }
  return true;
}

bool st_cp_continuity() {
  // Exact closure needs symbol instants on the sample grid and no spectrum
  // truncation: L=1, and L=2 with every bin transmitted.
  for (int l : {1, 2}) {
    WaveformConfig cfg;
    cfg.k = 16; cfg.l = l; cfg.e = l == 2 ? 16 : 0; cfg.n = 128; cfg.n_cp = 8;
    cfg.cp_continuity = true; cfg.symbol_continuity = true;
    Rng rng(3);
    std::vector<std::uint8_t> bits(8 * cfg.bits_per_frame());
    rng.fill_bits(bits.data(), bits.size());
    auto frames = modulate_frame_stream(bits, cfg);
    for (std::size_t f = 0; f + 1 < frames.size(); ++f) {
      if (!frames[f].exact_continuity) return false;
      const double resid = wrap_to_pi(std::arg(frames[f + 1].samples[0]) -
                                      frames[f].last_phase);
      if (std::abs(resid) > 1e-9) return false;
    }
  }
  return true;
}

bool st_end_to_end() {
  DetectorConfig det;
  det.lambda = 0.0;
  for (bool sym : {true, false})
    for (bool cp : {false, true})
      for (bool cont : {false, true})
        for (int l : {1, 2}) {
          WaveformConfig cfg;
          cfg.k = 12; cfg.l = l; cfg.e = 0; cfg.n = 64 * l; cfg.n_cp = 6 * l;
          cfg.cp_continuity = cp; cfg.symbol_continuity = cont;
          cfg.mapping = sym ? MappingKind::Symmetric : MappingKind::NonSymmetric;
          const MappingTable& t = sym ? MappingTable::symmetric()
                                      : MappingTable::non_symmetric();
          Rng rng(29 + l);
          std::vector<std::uint8_t> bits(3 * cfg.bits_per_frame());
          rng.fill_bits(bits.data(), bits.size());
          auto frames = modulate_frame_stream(bits, cfg);
          for (std::size_t f = 0; f < frames.size(); ++f) {
            auto syms = rx_frontend(frames[f], cfg);
            derotate(syms, frames[f].u);
            auto got = viterbi_detect(syms, det, t, cp).bits;
            for (int b = 0; b < cfg.bits_per_frame(); ++b) {
              if (got[b] != bits[f * cfg.bits_per_frame() + b]) return false;
            }
          }
        }
  return true;
}

bool st_even_index() {
  std::vector<double> phases = {0.1, 1.7, -2.0, 3.0, 0.5, -1.1};
  std::vector<Transition> tr(phases.size(), Transition::Zero);
  auto out = interpolate_phases(phases, tr, 0.05);
  for (std::size_t k = 0; k < phases.size(); ++k) {
    if (out[2 * k] != phases[k]) return false;
  }
  return true;
}

bool st_isi_free() {
  const int k = 12, l = 2, kp = k * l;
  std::vector<cd> x(kp, cd(0, 0));
  x[0] = 1.0;
  auto spec = fft_forward(x);
  for (int f = k / 2; f < kp - k / 2; ++f) spec[f] = 0;  // keep K centered bins
  auto y = fft_inverse(spec);
  for (int m = 1; m < k; ++m) {
    if (std::abs(y[2 * m]) > 1e-12) return false;
  }
  return std::abs(y[0] - cd(double(k) / kp, 0)) < 1e-12;
}

bool st_obw_monotone() {
  WaveformConfig cfg;
  cfg.k = 12; cfg.l = 2; cfg.e = 4; cfg.n = 128; cfg.n_cp = 9;
  cfg.cp_continuity = true; cfg.symbol_continuity = true; cfg.a = 0.05;
  Rng rng(41);
  std::vector<std::uint8_t> bits(64 * cfg.bits_per_frame());
  rng.fill_bits(bits.data(), bits.size());
  auto frames = modulate_frame_stream(bits, cfg);
  auto stream = concat_frames(frames);
  WelchParams wp;
  wp.segment = 512;
  auto psd = psd_estimate(stream, wp, cfg);
  double last = 0.0;
  for (double ratio : {-10.0, -20.0, -30.0}) {
    auto r = normalized_obw(psd, ratio);
    if (r.bandwidth < last) return false;
    last = r.bandwidth;
  }
  return true;
}

bool st_determinism() {
  json cfg = {
      {"waveform", {{"k", 12}, {"l", 2}, {"n", 128}, {"n_cp", 9},
                    {"cp_continuity", true}, {"symbol_continuity", true}}},
      {"trials", 4},
      {"frames_per_trial", 16},
      {"seed", 5},
  };
  ExperimentSpec spec = parse_experiment(cfg, ExperimentKind::Papr);
  auto a = run_experiment(spec, ExecMode::Serial);
  auto b = run_experiment(spec, ExecMode::Serial);
  auto c = run_experiment(spec, ExecMode::Parallel);
  return a.rows == b.rows && a.rows == c.rows;
}

int run_selftest() {
  bool ok = true;
  ok &= check("mapping round trip, transition alphabet, avoided pair", st_mapping_roundtrip());
  ok &= check("constant envelope at L=1", st_constant_envelope());
  ok &= check("cyclic-prefix phase continuity at exact numerology", st_cp_continuity());
  ok &= check("noiseless end-to-end bit identity, 16 flag combinations", st_end_to_end());
  ok &= check("interpolation preserves symbol instants", st_even_index());
  ok &= check("half-band truncation is ISI free at symbol instants", st_isi_free());
  ok &= check("occupied bandwidth monotone in containment ratio", st_obw_monotone());
  ok &= check("fixed seed determinism, serial matches parallel", st_determinism());
  std::cout << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3MSK DFT-s-OFDM simulation toolkit"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* desc;
    ExperimentKind kind;
  };
  const Sub subs[] = {
      {"papr", "peak-to-average power CCDF study", ExperimentKind::Papr},
      {"psd", "Welch power spectral density estimate", ExperimentKind::Psd},
      {"obw", "normalized occupied bandwidth", ExperimentKind::Obw},
      {"obo", "achievable PA output backoff under RF limits", ExperimentKind::Obo},
      {"link", "coded-bit error rate over an impaired link", ExperimentKind::Link},
  };
  CmdOpts opts[5];
  CLI::App* cmds[5];
  for (int i = 0; i < 5; ++i) {
    cmds[i] = app.add_subcommand(subs[i].name, subs[i].desc);
    add_common_options(cmds[i], opts[i], subs[i].kind == ExperimentKind::Link);
  }
  CLI::App* selftest = app.add_subcommand("selftest", "quick structural invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (selftest->parsed()) return run_selftest();
    for (int i = 0; i < 5; ++i) {
      if (cmds[i]->parsed()) return run_cmd(subs[i].kind, opts[i]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// Experiment orchestration: deterministic seeding, sweeps, trial-level
// parallelism with ordered reduction, and CSV/JSON result emission.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msk3/config.hpp"
#include "msk3/impairments.hpp"
#include "msk3/rng.hpp"
#include "msk3/metrics.hpp"
#include "msk3/rx.hpp"
#include "msk3/waveform.hpp"

namespace msk3 {

enum class ExperimentKind { Papr, Psd, Obw, Obo, Link };
enum class ExecMode { Serial, Parallel };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Papr;
  WaveformConfig waveform;
  std::string modulation = "msk3";  // msk3 | qpsk | tone

  // Impairments; absent pieces stay disabled.
  std::optional<PaModel> pa;
  double pa_ibo_db = 8.0;
  std::optional<PnModel> pn_tx;
  std::optional<PnModel> pn_rx;
  std::optional<TdlProfile> tdl;

  DetectorConfig detector;
  std::string algorithm = "viterbi";  // viterbi | bcjr
  bool genie_derotation = true;       // coherent mode removes the TX rotation

  // Sweep axis: none | snr_db | prb | ebw_pct | oob_ratio_db
  std::string sweep_axis = "none";
  std::vector<double> sweep_values = {0.0};

  int trials = 1;
  int frames_per_trial = 100;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: runtime default
  std::string out = "result";

  PaprBasis papr_basis = PaprBasis::PerOfdmSymbol;
  double papr_probability = 1e-2;
  WelchParams welch;
  RfLimits limits;
  RfCheckConfig rf_check;
  OboScan obo_scan;

  json raw;  // resolved config for hashing and the JSON report

  void validate() const;
};

ExperimentSpec parse_experiment(const json& j, ExperimentKind kind);

struct ResultRecord {
  std::string experiment;
  std::uint64_t config_hash = 0;
  std::string build_id;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_labels;  // optional trailing text column
  std::string label_column;
  double runtime_s = 0.0;
  json meta;
};

ResultRecord run_experiment(const ExperimentSpec& spec, ExecMode mode = ExecMode::Parallel);

void write_csv(const ResultRecord& rec, const std::string& path);
void write_json_report(const ResultRecord& rec, const std::string& path);
std::string build_id_string();

// Per-trial link simulation, exposed for tests and the benchmark. Returns
// accumulated BER stats for one seed/SNR point. Optional sinks collect soft
// outputs and the tracked phase offset per detection stage for export.
struct LinkPointConfig {
  const ExperimentSpec* spec;
  double snr_db = 0.0;
  int point_index = 0;
  std::vector<double>* llr_sink = nullptr;
  std::vector<double>* delta_sink = nullptr;
};
LinkStats run_link_trial(const LinkPointConfig& pt, int trial_index);

// Clean modulated sample stream for one trial of the spec (no impairments).
std::vector<cd> reference_stream(const ExperimentSpec& spec, int point, int trial);

// Deterministic per-stage sub-seed.
std::uint64_t trial_seed(std::uint64_t master, RngStream stage, int point, int trial);

}  // namespace msk3

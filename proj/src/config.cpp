#include "msk3/config.hpp"

#include <filesystem>
#include <fstream>

namespace msk3 {

namespace {

void merge_into(json& base, const json& patch) {
  if (!patch.is_object() || !base.is_object()) {
    base = patch;
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object()) {
      merge_into(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

json load_resolved(const std::string& path, int depth) {
  require(depth < 16, "include chain too deep (cycle?)");
  std::ifstream in(path);
  require(in.good(), "cannot open config file: " + path);
  json j = json::parse(in);
  require(j.is_object(), "config root must be an object: " + path);

  json out = json::object();
  if (j.contains("include")) {
    const auto dir = std::filesystem::path(path).parent_path();
    for (const auto& inc : j["include"]) {
      require(inc.is_string(), "include entries must be paths");
      json base = load_resolved((dir / inc.get<std::string>()).string(), depth + 1);
      merge_into(out, base);
    }
    j.erase("include");
  }
  merge_into(out, j);
  return out;
}

}  // namespace

json load_config_json(const std::string& path) { return load_resolved(path, 0); }

std::string canonical_json(const json& j) {
  // nlohmann's default object storage is key-sorted and numbers serialize in
  // shortest round-trip form, so a plain dump is canonical.
  return j.dump();
}

std::uint64_t config_hash(const json& j) {
  const std::string s = canonical_json(j);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

WaveformConfig parse_waveform(const json& j) {
  WaveformConfig cfg;
  cfg.k = j.value("k", cfg.k);
  cfg.l = j.value("l", cfg.l);
  cfg.e = j.value("e", cfg.e);
  if (j.contains("ebw_pct")) {
    cfg.e = static_cast<int>(std::lround(j["ebw_pct"].get<double>() * cfg.k / 100.0));
    cfg.e += cfg.e % 2;  // keep even
  }
  cfg.n = j.value("n", cfg.n);
  cfg.n_cp = j.value("n_cp", cfg.n_cp);
  cfg.a = j.value("a", cfg.a);
  cfg.cp_continuity = j.value("cp_continuity", cfg.cp_continuity);
  cfg.symbol_continuity = j.value("symbol_continuity", cfg.symbol_continuity);
  cfg.allocation_offset = j.value("allocation_offset", cfg.allocation_offset);
  const std::string m = j.value("mapping", "symmetric");
  if (m == "symmetric") cfg.mapping = MappingKind::Symmetric;
  else if (m == "non_symmetric") cfg.mapping = MappingKind::NonSymmetric;
  else fail("mapping must be symmetric or non_symmetric");
  cfg.validate();
  return cfg;
}

DetectorConfig parse_detector(const json& j) {
  DetectorConfig det;
  det.lambda = j.value("lambda", det.lambda);
  det.enforce_equal_endpoints =
      j.value("enforce_equal_endpoints", det.enforce_equal_endpoints);
  const std::string metric = j.value("metric", "euclidean");
  if (metric == "euclidean") det.metric = DetectorConfig::Metric::Euclidean;
  else if (metric == "angular") det.metric = DetectorConfig::Metric::Angular;
  else fail("metric must be euclidean or angular");
  const std::string mode = j.value("mode", "coherent");
  if (mode == "coherent") det.mode = DetectorConfig::Mode::Coherent;
  else if (mode == "non_coherent") det.mode = DetectorConfig::Mode::NonCoherent;
  else fail("mode must be coherent or non_coherent");
  det.validate();
  return det;
}

PnModel parse_pn(const json& j) {
  PnModel pn;
  const std::string kind = j.value("kind", "wiener");
  if (kind == "wiener") pn.kind = PnModel::Kind::Wiener;
  else if (kind == "shaped_psd") pn.kind = PnModel::Kind::ShapedPsd;
  else fail("pn kind must be wiener or shaped_psd");
  pn.linewidth_hz = j.value("linewidth_hz", pn.linewidth_hz);
  pn.sample_rate_hz = j.value("sample_rate_hz", pn.sample_rate_hz);
  if (j.contains("psd")) {
    for (const auto& row : j["psd"]) {
      require(row.is_array() && row.size() == 2, "psd rows are [freq_hz, dbc_hz]");
      pn.psd.push_back({row[0].get<double>(), row[1].get<double>()});
    }
  }
  pn.validate();
  return pn;
}

PaModel parse_pa(const json& j) {
  PaModel pa;
  const std::string kind = j.value("kind", "modified_rapp");
  if (kind == "linear") pa.kind = PaModel::Kind::Linear;
  else if (kind == "modified_rapp") pa.kind = PaModel::Kind::ModifiedRapp;
  else fail("pa kind must be linear or modified_rapp");
  pa.gain = j.value("gain", pa.gain);
  pa.vsat = j.value("vsat", pa.vsat);
  pa.p = j.value("p", pa.p);
  pa.ampm_alpha = j.value("ampm_alpha", pa.ampm_alpha);
  pa.ampm_beta = j.value("ampm_beta", pa.ampm_beta);
  pa.ampm_q = j.value("ampm_q", pa.ampm_q);
  pa.validate();
  return pa;
}

TdlProfile parse_tdl(const json& j) {
  TdlProfile tdl;
  require(j.contains("delays") && j.contains("powers_db"), "tdl needs delays/powers_db");
  for (const auto& d : j["delays"]) tdl.delays.push_back(d.get<int>());
  for (const auto& p : j["powers_db"]) tdl.powers_db.push_back(p.get<double>());
  tdl.validate();
  return tdl;
}

RfLimits parse_rf_limits(const json& j) {
  RfLimits lim;
  lim.aclr_min_db = j.value("aclr_min_db", lim.aclr_min_db);
  lim.evm_max_pct = j.value("evm_max_pct", lim.evm_max_pct);
  lim.obw_fraction = j.value("obw_fraction", lim.obw_fraction);
  lim.ibe_limit_db = j.value("ibe_limit_db", lim.ibe_limit_db);
  return lim;
}

WelchParams parse_welch(const json& j) {
  WelchParams w;
  w.segment = j.value("segment", w.segment);
  w.overlap = j.value("overlap", w.overlap);
  return w;
}

}  // namespace msk3

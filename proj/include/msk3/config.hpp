// JSON experiment configuration: include/override resolution, canonical
// hashing, and typed parsing of the component configs.
#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "msk3/impairments.hpp"
#include "msk3/metrics.hpp"
#include "msk3/rx.hpp"
#include "msk3/waveform.hpp"

namespace msk3 {

using json = nlohmann::json;

// Loads a config file, resolving "include": ["base.json", ...] recursively
// (listed files merge in order, the including file's own keys win; nested
// objects merge key-wise, everything else is replaced).
json load_config_json(const std::string& path);

// Canonical serialization: keys sorted, numbers in shortest round-trip form.
std::string canonical_json(const json& j);

// FNV-1a 64-bit over the canonical serialization.
std::uint64_t config_hash(const json& j);

WaveformConfig parse_waveform(const json& j);
DetectorConfig parse_detector(const json& j);
PnModel parse_pn(const json& j);
PaModel parse_pa(const json& j);
TdlProfile parse_tdl(const json& j);
RfLimits parse_rf_limits(const json& j);
WelchParams parse_welch(const json& j);

}  // namespace msk3

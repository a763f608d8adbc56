// IQ and soft-output export.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "msk3/common.hpp"

namespace msk3 {

// Interleaved I/Q as 64-bit little-endian floats.
void write_iq_f64le(const std::string& path, std::span<const cd> samples);
std::vector<cd> read_iq_f64le(const std::string& path);

// CSV: index,i,q
void write_iq_csv(const std::string& path, std::span<const cd> samples);

// CSV: bit_index,llr
void write_llr_csv(const std::string& path, std::span<const double> llrs);

}  // namespace msk3

#include "msk3/iq_io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

namespace msk3 {

static_assert(std::endian::native == std::endian::little,
              "f64le export assumes a little-endian host");

void write_iq_f64le(const std::string& path, std::span<const cd> samples) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open for writing: " + path);
  for (const auto& s : samples) {
    const double iq[2] = {s.real(), s.imag()};
    out.write(reinterpret_cast<const char*>(iq), sizeof(iq));
  }
  require(out.good(), "write failed: " + path);
}

std::vector<cd> read_iq_f64le(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open: " + path);
  std::vector<cd> samples;
  double iq[2];
  while (in.read(reinterpret_cast<char*>(iq), sizeof(iq))) {
    samples.emplace_back(iq[0], iq[1]);
  }
  return samples;
}

void write_iq_csv(const std::string& path, std::span<const cd> samples) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  out << "index,i,q\n";
  char buf[80];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, samples[i].real(),
                  samples[i].imag());
    out << buf;
  }
}

void write_llr_csv(const std::string& path, std::span<const double> llrs) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  out << "bit_index,llr\n";
  char buf[48];
  for (std::size_t i = 0; i < llrs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i, llrs[i]);
    out << buf;
  }
}

}  // namespace msk3

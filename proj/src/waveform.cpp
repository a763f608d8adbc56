#include "msk3/waveform.hpp"

#include <algorithm>
#include <cmath>

#include "msk3/fft.hpp"

namespace msk3 {

void WaveformConfig::validate() const {
  require(k >= 2 && k % 2 == 0, "K must be even and >= 2");
  require(l == 1 || l == 2, "L must be 1 or 2");
  require(e >= 0 && e % 2 == 0, "E must be even and >= 0");
  require(e <= l * k - k, "E exceeds the oversampled band (E <= L*K - K)");
  require(n >= k + e, "IFFT size smaller than the mapped bins");
  require(n % 2 == 0, "IFFT size must be even");
  require(n_cp >= 0 && n_cp <= n, "CP length must be in [0, N]");
  require(a >= 0.0 && a <= 0.25, "interpolation parameter out of [0, 0.25]");
  if (l == 1) require(e == 0, "L=1 has no excess band");
  int first = first_inband();
  require(first - e / 2 >= 0 && first + k + e / 2 <= n,
          "allocation (with excess band) exceeds the grid");
}

std::vector<double> interpolate_phases(std::span<const double> phases,
                                       std::span<const Transition> steps_into,
                                       double a) {
  const int kb = static_cast<int>(phases.size());
  require(kb >= 2, "need at least two phases");
  require(steps_into.size() == phases.size(), "one step per phase required");
  std::vector<double> out(2 * kb);
  for (int k = 0; k < kb; ++k) {
    out[2 * k] = phases[k];
    double t1 = phase_step(steps_into[(k + 1) % kb]);
    double t0 = phase_step(steps_into[k]);
    double t2 = phase_step(steps_into[(k + 2) % kb]);
    out[2 * k + 1] = wrap_to_2pi(phases[k] + 0.5 * t1 + a * (t0 - t2));
  }
  return out;
}

std::vector<cd> dft_spread_and_map(std::span<const cd> block, const WaveformConfig& cfg) {
  cfg.validate();
  const int kp = cfg.dft_size();
  require(static_cast<int>(block.size()) == kp, "block length must be L*K");
  std::vector<cd> spec = fft_forward(block);

  std::vector<cd> grid(cfg.n, cd(0.0, 0.0));
  const int half = cfg.mapped_bins() / 2;
  const int center = cfg.allocation_center();
  for (int f = -half; f < half; ++f) {
    grid[natural_bin(center + f, cfg.n)] = spec[(f + kp) % kp];
  }
  return grid;
}

FrameSamples ofdm_modulate(std::span<const cd> grid, const WaveformConfig& cfg) {
  require(static_cast<int>(grid.size()) == cfg.n, "grid length must be N");
  require(cfg.n_cp <= cfg.n, "CP longer than the symbol");
  std::vector<cd> body = fft_inverse(grid);

  FrameSamples fr;
  fr.cp_len = cfg.n_cp;
  // Phase closes exactly only when symbol instants sit on the sample grid AND
  // no spectrum truncation perturbs them (L=1, or every L*K bin transmitted).
  fr.exact_continuity = cfg.exact_symbol_numerology() &&
                        (cfg.l == 1 || cfg.e == cfg.l * cfg.k - cfg.k);
  fr.samples.resize(cfg.n_cp + cfg.n);
  std::copy(body.end() - cfg.n_cp, body.end(), fr.samples.begin());
  std::copy(body.begin(), body.end(), fr.samples.begin() + cfg.n_cp);
  fr.last_phase = std::arg(body[0]);
  return fr;
}

void rotate_for_continuity(FrameSamples& frame, double prev_last_phase) {
  double phi_diff = prev_last_phase - std::arg(frame.samples[0]);
  // Candidate quarter-turn counts bracketing phi_diff.
  double ratio = phi_diff / half_pi;
  int lo = static_cast<int>(std::floor(ratio));
  int best = lo;
  double best_res = std::abs(lo * half_pi - phi_diff);
  for (int u : {lo + 1}) {
    double res = std::abs(u * half_pi - phi_diff);
    if (res < best_res - 1e-15 ||
        (std::abs(res - best_res) <= 1e-15 &&
         (std::abs(u) < std::abs(best) || (std::abs(u) == std::abs(best) && u > best)))) {
      best = u;
      best_res = res;
    }
  }
  frame.u = best;
  cd rot = std::polar(1.0, best * half_pi);
  for (auto& s : frame.samples) s *= rot;
  frame.last_phase = std::arg(frame.samples[frame.cp_len]);
}

FrameSamples modulate_block(const MskBlock& block, const WaveformConfig& cfg) {
  cfg.validate();
  require(block.size() == cfg.k, "block size must equal K");
  std::vector<cd> pre;
  if (cfg.l == 2) {
    auto steps = block.steps_into();
    auto ph = interpolate_phases(block.phases, steps, cfg.a);
    pre.resize(ph.size());
    for (std::size_t i = 0; i < ph.size(); ++i) pre[i] = std::polar(1.0, ph[i]);
  } else {
    pre = block.symbols;
  }
  auto grid = dft_spread_and_map(pre, cfg);
  return ofdm_modulate(grid, cfg);
}

StreamModulator::StreamModulator(const WaveformConfig& cfg, const MappingTable& table)
    : cfg_(cfg), table_(&table) {
  cfg_.validate();
}

FrameSamples StreamModulator::next(std::span<const std::uint8_t> frame_bits) {
  MskBlock blk = map_bits(frame_bits, *table_, cfg_.cp_continuity, 0.0);
  FrameSamples fr = modulate_block(blk, cfg_);
  if (cfg_.symbol_continuity && !first_) {
    rotate_for_continuity(fr, prev_last_);
  }
  first_ = false;
  prev_last_ = fr.last_phase;
  return fr;
}

std::vector<FrameSamples> modulate_frame_stream(std::span<const std::uint8_t> bits,
                                                const WaveformConfig& cfg) {
  const MappingTable& table = cfg.mapping == MappingKind::Symmetric
                                  ? MappingTable::symmetric()
                                  : MappingTable::non_symmetric();
  const int bpf = cfg.bits_per_frame();
  require(bits.size() % bpf == 0, "bit count must be a multiple of the frame budget");
  StreamModulator mod(cfg, table);
  std::vector<FrameSamples> frames;
  frames.reserve(bits.size() / bpf);
  for (std::size_t off = 0; off + bpf <= bits.size(); off += bpf) {
    frames.push_back(mod.next(bits.subspan(off, bpf)));
  }
  return frames;
}

std::vector<cd> qpsk_map(std::span<const std::uint8_t> bits) {
  require(bits.size() % 2 == 0, "QPSK needs an even bit count");
  std::vector<cd> sym(bits.size() / 2);
  const double s = std::numbers::sqrt2 / 2.0;
  for (std::size_t i = 0; i < sym.size(); ++i) {
    sym[i] = cd((1 - 2 * bits[2 * i]) * s, (1 - 2 * bits[2 * i + 1]) * s);
  }
  return sym;
}

std::vector<FrameSamples> qpsk_reference_frame_stream(std::span<const std::uint8_t> bits,
                                                      const WaveformConfig& cfg) {
  cfg.validate();
  require(cfg.l == 1 && cfg.e == 0, "QPSK reference runs at L=1, E=0");
  const int bpf = 2 * cfg.k;
  require(bits.size() % bpf == 0, "bit count must be a multiple of 2K");
  std::vector<FrameSamples> frames;
  frames.reserve(bits.size() / bpf);
  for (std::size_t off = 0; off + bpf <= bits.size(); off += bpf) {
    auto sym = qpsk_map(bits.subspan(off, bpf));
    auto grid = dft_spread_and_map(sym, cfg);
    frames.push_back(ofdm_modulate(grid, cfg));
  }
  return frames;
}

std::vector<int> inband_bins(const WaveformConfig& cfg) {
  std::vector<int> bins(cfg.k);
  const int center = cfg.allocation_center();
  for (int f = -cfg.k / 2; f < cfg.k / 2; ++f) {
    bins[f + cfg.k / 2] = natural_bin(center + f, cfg.n);
  }
  return bins;
}

double inband_energy_per_symbol(std::span<const cd> grid, const WaveformConfig& cfg) {
  double acc = 0.0;
  const int center = cfg.allocation_center();
  for (int f = -cfg.k / 2; f < cfg.k / 2; ++f) {
    acc += sqnorm(grid[natural_bin(center + f, cfg.n)]);
  }
  return acc / cfg.k;
}

std::vector<cd> concat_frames(const std::vector<FrameSamples>& frames) {
  std::size_t total = 0;
  for (const auto& f : frames) total += f.samples.size();
  std::vector<cd> out;
  out.reserve(total);
  for (const auto& f : frames) {
    out.insert(out.end(), f.samples.begin(), f.samples.end());
  }
  return out;
}

}  // namespace msk3

#include "msk3/rx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msk3/fft.hpp"

namespace msk3 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int mod4(int x) { return ((x % 4) + 4) % 4; }

double branch_dist(cd r, double delta, int state, DetectorConfig::Metric metric) {
  if (metric == DetectorConfig::Metric::Euclidean) {
    return sqnorm(r * std::polar(1.0, -delta) - state_symbol(state));
  }
  return std::abs(wrap_to_pi(std::arg(r) - delta - state_phase(state)));
}

struct Branch {
  int prev;
  int mid;
  int end;
  TransitionPair pair;
  std::array<std::uint8_t, 3> bits{};
  int n_bits = 3;
};

struct Section {
  int obs0 = -1;
  int obs1 = -1;  // -1: second transition unobserved (terminal section)
  std::vector<Branch> branches;
};

struct Layout {
  std::vector<Section> sections;
  bool cp = false;
  int start = 0;
  int n_obs = 0;
};

Layout build_layout(int k, const MappingTable& table, bool cp_continuous,
                    bool enforce_endpoints, int start_state) {
  Layout lay;
  lay.cp = cp_continuous;
  lay.start = start_state;
  lay.n_obs = k;

  auto main_section = [&](int o0, int o1) {
    Section sec;
    sec.obs0 = o0;
    sec.obs1 = o1;
    for (int m = 0; m < 4; ++m) {
      for (int b = 0; b < 8; ++b) {
        Branch br;
        br.prev = m;
        br.pair = table.pair_for(b);
        br.mid = mod4(m + quarters(br.pair.first));
        br.end = mod4(br.mid + quarters(br.pair.second));
        br.bits = {static_cast<std::uint8_t>((b >> 2) & 1),
                   static_cast<std::uint8_t>((b >> 1) & 1),
                   static_cast<std::uint8_t>(b & 1)};
        br.n_bits = 3;
        sec.branches.push_back(br);
      }
    }
    return sec;
  };

  if (!cp_continuous) {
    for (int i = 0; i < k / 2; ++i) {
      lay.sections.push_back(main_section(2 * i, 2 * i + 1));
    }
    return lay;
  }

  for (int i = 0; i < k / 2 - 1; ++i) {
    lay.sections.push_back(main_section(1 + 2 * i, 2 + 2 * i));
  }

  // Terminal section: first transition observed at the last sample, second
  // returns to the (unobserved) start-state copy that the CP carries.
  Section term;
  term.obs0 = k - 1;
  term.obs1 = -1;
  for (int m = 0; m < 4; ++m) {
    const int prior = mod4(m - start_state);
    if (enforce_endpoints) {
      for (int bit = 0; bit < 2; ++bit) {
        Branch br;
        br.prev = m;
        br.pair = table.terminal_pair(prior, bit);
        br.mid = mod4(m + quarters(br.pair.first));
        br.end = mod4(br.mid + quarters(br.pair.second));
        br.bits = {static_cast<std::uint8_t>(bit), 0, 0};
        br.n_bits = 1;
        term.branches.push_back(br);
      }
    } else {
      for (int b = 0; b < 8; ++b) {
        Branch br;
        br.prev = m;
        br.pair = table.pair_for(b);
        br.mid = mod4(m + quarters(br.pair.first));
        br.end = mod4(br.mid + quarters(br.pair.second));
        const std::uint8_t bit =
            br.pair == table.terminal_pair(prior, 1) ? 1 : 0;
        br.bits = {bit, 0, 0};
        br.n_bits = 1;
        term.branches.push_back(br);
      }
    }
  }
  lay.sections.push_back(term);
  return lay;
}

struct Survivor {
  int prev = -1;
  const Branch* branch = nullptr;
  double delta_mid = 0.0;
  double delta_end = 0.0;
};

struct ForwardPass {
  std::array<double, 4> alpha{};
  std::array<double, 4> delta{};
  std::vector<std::array<Survivor, 4>> surv;          // per section
  std::vector<std::array<double, 4>> delta_pre;       // per section, at entry
  std::vector<std::array<double, 4>> delta_post;      // per section, at exit
  double init_delta = 0.0;                            // after the initial observation
};

ForwardPass viterbi_forward(std::span<const cd> r, const Layout& lay,
                            const DetectorConfig& det) {
  ForwardPass fp;
  fp.alpha.fill(kInf);
  fp.delta.fill(0.0);
  fp.alpha[lay.start] = 0.0;

  if (lay.cp) {
    fp.alpha[lay.start] = branch_dist(r[0], 0.0, lay.start, det.metric);
    fp.delta[lay.start] = track_phase_update(0.0, std::arg(r[0]),
                                             state_phase(lay.start), det.lambda);
    fp.init_delta = fp.delta[lay.start];
  }

  fp.surv.resize(lay.sections.size());
  fp.delta_pre.resize(lay.sections.size());
  fp.delta_post.resize(lay.sections.size());

  for (std::size_t i = 0; i < lay.sections.size(); ++i) {
    const Section& sec = lay.sections[i];
    fp.delta_pre[i] = fp.delta;
    std::array<double, 4> na;
    na.fill(kInf);
    std::array<Survivor, 4> ns{};

    for (const Branch& br : sec.branches) {
      if (!std::isfinite(fp.alpha[br.prev])) continue;
      const double d0 = fp.delta[br.prev];
      const double c1 = branch_dist(r[sec.obs0], d0, br.mid, det.metric);
      const double dm = track_phase_update(d0, std::arg(r[sec.obs0]),
                                           state_phase(br.mid), det.lambda);
      double c2 = 0.0;
      double de = dm;
      if (sec.obs1 >= 0) {
        c2 = branch_dist(r[sec.obs1], dm, br.end, det.metric);
        de = track_phase_update(dm, std::arg(r[sec.obs1]),
                                state_phase(br.end), det.lambda);
      }
      const double cand = fp.alpha[br.prev] + c1 + c2;
      if (cand < na[br.end]) {
        na[br.end] = cand;
        ns[br.end] = Survivor{br.prev, &br, dm, de};
      }
    }
    fp.alpha = na;
    for (int s = 0; s < 4; ++s) fp.delta[s] = ns[s].branch ? ns[s].delta_end : 0.0;
    fp.surv[i] = ns;
    fp.delta_post[i] = fp.delta;
  }
  return fp;
}

DetectionResult viterbi_single(std::span<const cd> r, const DetectorConfig& det,
                               const MappingTable& table, bool cp_continuous,
                               int start_state) {
  const int k = static_cast<int>(r.size());
  Layout lay = build_layout(k, table, cp_continuous, det.enforce_equal_endpoints,
                            start_state);
  ForwardPass fp = viterbi_forward(r, lay, det);

  DetectionResult res;
  res.start_state = start_state;
  res.delta_trace.assign(fp.delta_post.begin(), fp.delta_post.end());

  int end = 0;
  if (cp_continuous && det.enforce_equal_endpoints) {
    end = start_state;
    if (!std::isfinite(fp.alpha[end])) {
      // Defensive: terminal sections always land on the start state, so this
      // path should be unreachable.
      res.fallback = true;
      end = static_cast<int>(std::min_element(fp.alpha.begin(), fp.alpha.end()) -
                             fp.alpha.begin());
    }
  } else {
    end = static_cast<int>(std::min_element(fp.alpha.begin(), fp.alpha.end()) -
                           fp.alpha.begin());
  }
  res.end_state = end;
  res.endpoint_ok = (end == start_state);
  res.path_metric = fp.alpha[end];

  // Traceback.
  std::vector<const Survivor*> path(lay.sections.size());
  int s = end;
  for (int i = static_cast<int>(lay.sections.size()) - 1; i >= 0; --i) {
    path[i] = &fp.surv[i][s];
    s = path[i]->prev;
  }

  if (lay.cp) res.survivor_phase_trace.push_back(fp.init_delta);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Survivor* sv = path[i];
    const Branch* br = sv->branch;
    res.transitions.push_back(br->pair.first);
    res.transitions.push_back(br->pair.second);
    for (int b = 0; b < br->n_bits; ++b) res.bits.push_back(br->bits[b]);
    res.survivor_phase_trace.push_back(sv->delta_mid);
    if (lay.sections[i].obs1 >= 0) res.survivor_phase_trace.push_back(sv->delta_end);
  }
  return res;
}

double logsumexp(std::span<const double> v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

struct BcjrRun {
  std::vector<double> llrs;
  double evidence = -kInf;
};

BcjrRun bcjr_single(std::span<const cd> r, const DetectorConfig& det,
                    const MappingTable& table, bool cp_continuous,
                    double noise_variance, int start_state) {
  const int k = static_cast<int>(r.size());
  const double sigma2 = std::max(noise_variance, 1e-12);
  Layout lay = build_layout(k, table, cp_continuous, det.enforce_equal_endpoints,
                            start_state);

  // Per-state phase estimates from the survivor pass, frozen for both
  // recursions. With lambda = 0 they are identically zero.
  ForwardPass fp;
  if (det.lambda > 0.0) {
    DetectorConfig vdet = det;
    vdet.metric = DetectorConfig::Metric::Euclidean;
    fp = viterbi_forward(r, lay, vdet);
  } else {
    fp.delta_pre.assign(lay.sections.size(), {0.0, 0.0, 0.0, 0.0});
    fp.init_delta = 0.0;
  }

  const std::size_t ns = lay.sections.size();

  auto loggamma = [&](std::size_t i, const Branch& br) {
    const Section& sec = lay.sections[i];
    const double d0 = fp.delta_pre[i][br.prev];
    double c = branch_dist(r[sec.obs0], d0, br.mid, DetectorConfig::Metric::Euclidean);
    if (sec.obs1 >= 0) {
      const double dm = track_phase_update(d0, std::arg(r[sec.obs0]),
                                           state_phase(br.mid), det.lambda);
      c += branch_dist(r[sec.obs1], dm, br.end, DetectorConfig::Metric::Euclidean);
    }
    return -c / sigma2;
  };

  // Forward.
  std::vector<std::array<double, 4>> la(ns + 1);
  la[0].fill(-kInf);
  la[0][start_state] = 0.0;
  if (lay.cp) {
    la[0][start_state] =
        -branch_dist(r[0], 0.0, start_state, DetectorConfig::Metric::Euclidean) / sigma2;
  }
  for (std::size_t i = 0; i < ns; ++i) {
    std::array<std::vector<double>, 4> terms;
    for (const Branch& br : lay.sections[i].branches) {
      if (la[i][br.prev] == -kInf) continue;
      terms[br.end].push_back(la[i][br.prev] + loggamma(i, br));
    }
    for (int s = 0; s < 4; ++s) la[i + 1][s] = logsumexp(terms[s]);
  }

  // Backward.
  std::vector<std::array<double, 4>> lb(ns + 1);
  lb[ns].fill(0.0);
  for (int i = static_cast<int>(ns) - 1; i >= 0; --i) {
    std::array<std::vector<double>, 4> terms;
    for (const Branch& br : lay.sections[i].branches) {
      if (lb[i + 1][br.end] == -kInf) continue;
      terms[br.prev].push_back(loggamma(i, br) + lb[i + 1][br.end]);
    }
    for (int s = 0; s < 4; ++s) lb[i][s] = logsumexp(terms[s]);
  }

  BcjrRun run;
  for (std::size_t i = 0; i < ns; ++i) {
    const Section& sec = lay.sections[i];
    const int nb = sec.branches.front().n_bits;
    for (int b = 0; b < nb; ++b) {
      std::vector<double> one, zero;
      for (const Branch& br : sec.branches) {
        if (la[i][br.prev] == -kInf) continue;
        const double m = la[i][br.prev] + loggamma(i, br) + lb[i + 1][br.end];
        (br.bits[b] ? one : zero).push_back(m);
      }
      run.llrs.push_back(logsumexp(one) - logsumexp(zero));
    }
  }

  std::vector<double> fin;
  if (lay.cp && det.enforce_equal_endpoints) {
    fin.push_back(la[ns][start_state]);
  } else {
    for (int s = 0; s < 4; ++s) fin.push_back(la[ns][s]);
  }
  run.evidence = logsumexp(fin);
  return run;
}

}  // namespace

void DetectorConfig::validate() const {
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0, 1]");
}

double track_phase_update(double delta_prev, double observed_phase,
                          double state_phase, double lambda) {
  return (1.0 - lambda) * delta_prev +
         lambda * wrap_to_pi(observed_phase - state_phase);
}

DetectionResult viterbi_detect(std::span<const cd> symbols, const DetectorConfig& det,
                               const MappingTable& table, bool cp_continuous,
                               int start_state) {
  det.validate();
  const int k = static_cast<int>(symbols.size());
  require(k >= 2 && k % 2 == 0, "block size must be even and >= 2");
  if (cp_continuous) require(k >= 4, "cp-continuous block needs at least 4 symbols");

  if (det.mode == DetectorConfig::Mode::Coherent) {
    return viterbi_single(symbols, det, table, cp_continuous, mod4(start_state));
  }
  DetectionResult best;
  bool have = false;
  for (int s = 0; s < 4; ++s) {
    DetectionResult cand = viterbi_single(symbols, det, table, cp_continuous, s);
    if (!have || cand.path_metric < best.path_metric) {
      best = std::move(cand);
      have = true;
    }
  }
  return best;
}

std::vector<double> bcjr_detect(std::span<const cd> symbols, const DetectorConfig& det,
                                const MappingTable& table, bool cp_continuous,
                                double noise_variance, int start_state) {
  det.validate();
  const int k = static_cast<int>(symbols.size());
  require(k >= 2 && k % 2 == 0, "block size must be even and >= 2");
  if (cp_continuous) require(k >= 4, "cp-continuous block needs at least 4 symbols");

  if (det.mode == DetectorConfig::Mode::Coherent) {
    return bcjr_single(symbols, det, table, cp_continuous, noise_variance,
                       mod4(start_state))
        .llrs;
  }
  BcjrRun best;
  bool have = false;
  for (int s = 0; s < 4; ++s) {
    BcjrRun cand = bcjr_single(symbols, det, table, cp_continuous, noise_variance, s);
    if (!have || cand.evidence > best.evidence) {
      best = std::move(cand);
      have = true;
    }
  }
  return best.llrs;
}

std::vector<cd> rx_frontend(const FrameSamples& frame, const WaveformConfig& cfg,
                            const std::vector<cd>* cfr, double noise_variance,
                            double es) {
  cfg.validate();
  require(static_cast<int>(frame.samples.size()) == cfg.samples_per_frame(),
          "frame length mismatch");
  auto body = frame.body();
  std::vector<cd> spec = fft_forward(body);

  const int center = cfg.allocation_center();
  std::vector<cd> z(cfg.k);
  for (int f = -cfg.k / 2; f < cfg.k / 2; ++f) {
    cd y = spec[natural_bin(center + f, cfg.n)];
    if (cfr) {
      const cd h = (*cfr)[natural_bin(center + f, cfg.n)];
      y *= std::conj(h) / (sqnorm(h) + noise_variance / es);
    }
    z[(f + cfg.k) % cfg.k] = y;
  }
  std::vector<cd> sym = fft_inverse(z);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.l));
  for (auto& s : sym) s *= scale;
  return sym;
}

std::vector<cd> rx_frontend_fullband(const FrameSamples& frame,
                                     const WaveformConfig& cfg,
                                     const std::vector<cd>* cfr,
                                     double noise_variance, double es) {
  cfg.validate();
  require(cfg.mapped_bins() == cfg.dft_size(),
          "full-band frontend needs K + E = L*K (100% excess band)");
  require(static_cast<int>(frame.samples.size()) == cfg.samples_per_frame(),
          "frame length mismatch");
  auto body = frame.body();
  std::vector<cd> spec = fft_forward(body);

  const int kp = cfg.dft_size();
  const int center = cfg.allocation_center();
  std::vector<cd> z(kp);
  for (int f = -kp / 2; f < kp / 2; ++f) {
    cd y = spec[natural_bin(center + f, cfg.n)];
    if (cfr) {
      const cd h = (*cfr)[natural_bin(center + f, cfg.n)];
      y *= std::conj(h) / (sqnorm(h) + noise_variance / es);
    }
    z[(f + kp) % kp] = y;
  }
  return fft_inverse(z);
}

void derotate(std::span<cd> symbols, int u) {
  if (mod4(u) == 0) return;
  const cd rot = std::polar(1.0, -u * half_pi);
  for (auto& s : symbols) s *= rot;
}

}  // namespace msk3

#include "msk3/mapping.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

namespace msk3 {

namespace {

constexpr std::array<cd, 4> kQuadrantSymbols = {
    cd(1.0, 0.0), cd(0.0, 1.0), cd(-1.0, 0.0), cd(0.0, -1.0)};

int pair_index(const TransitionPair& p) {
  return (quarters(p.first) + 1) * 3 + (quarters(p.second) + 1);
}

int pair_sum(const TransitionPair& p) {
  return quarters(p.first) + quarters(p.second);
}

}  // namespace

Transition transition_from_quarters(int q) {
  require(q >= -1 && q <= 1, "transition must be -1, 0 or +1 quarter turns");
  return static_cast<Transition>(q);
}

bool MappingMetric::better_than(const MappingMetric& o) const {
  if (min_distance != o.min_distance) return min_distance > o.min_distance;
  return mean_hamming_at_min < o.mean_hamming_at_min;
}

MappingTable MappingTable::from_rows(const std::array<TransitionPair, 8>& rows) {
  MappingTable t;
  t.rows_ = rows;

  std::array<bool, 9> seen{};
  for (const auto& p : rows) {
    int idx = pair_index(p);
    require(!seen[idx], "mapping rows must be distinct transition pairs");
    seen[idx] = true;
  }
  for (int i = 0; i < 9; ++i) {
    if (!seen[i]) {
      t.avoided_ = TransitionPair{transition_from_quarters(i / 3 - 1),
                                  transition_from_quarters(i % 3 - 1)};
    }
  }
  require(pair_sum(t.avoided_) == 0,
          "the absent transition pair must have zero phase sum");
  t.kind_ = (quarters(t.avoided_.first) == 0 && quarters(t.avoided_.second) == 0)
                ? MappingKind::Symmetric
                : MappingKind::NonSymmetric;

  // Terminal rows: for each prior phase (quarter turns mod 4) keep the two
  // pairs that cancel it, excluding the avoided pair, ordered by first
  // transition ascending.
  for (int prior = 0; prior < 4; ++prior) {
    std::vector<TransitionPair> cands;
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) {
        TransitionPair p{transition_from_quarters(a), transition_from_quarters(b)};
        if (p == t.avoided_) continue;
        if (((prior + a + b) % 4 + 4) % 4 == 0) cands.push_back(p);
      }
    }
    require(cands.size() == 2, "terminal row derivation expects exactly two pairs");
    std::sort(cands.begin(), cands.end(), [](const auto& x, const auto& y) {
      if (x.first != y.first) return quarters(x.first) < quarters(y.first);
      return quarters(x.second) < quarters(y.second);
    });
    t.terminal_[prior] = {cands[0], cands[1]};
  }
  return t;
}

const MappingTable& MappingTable::symmetric() {
  static const MappingTable t = from_rows({{
      {Transition::MinusHalfPi, Transition::PlusHalfPi},   // 000
      {Transition::PlusHalfPi, Transition::MinusHalfPi},   // 001
      {Transition::MinusHalfPi, Transition::Zero},         // 010
      {Transition::Zero, Transition::MinusHalfPi},         // 011
      {Transition::Zero, Transition::PlusHalfPi},          // 100
      {Transition::PlusHalfPi, Transition::Zero},          // 101
      {Transition::MinusHalfPi, Transition::MinusHalfPi},  // 110
      {Transition::PlusHalfPi, Transition::PlusHalfPi},    // 111
  }});
  return t;
}

const MappingTable& MappingTable::non_symmetric() {
  // Same labels as the symmetric table, with the (+,-) row replaced by the
  // zero-step pair it trades against.
  static const MappingTable t = from_rows({{
      {Transition::MinusHalfPi, Transition::PlusHalfPi},   // 000
      {Transition::Zero, Transition::Zero},                // 001
      {Transition::MinusHalfPi, Transition::Zero},         // 010
      {Transition::Zero, Transition::MinusHalfPi},         // 011
      {Transition::Zero, Transition::PlusHalfPi},          // 100
      {Transition::PlusHalfPi, Transition::Zero},          // 101
      {Transition::MinusHalfPi, Transition::MinusHalfPi},  // 110
      {Transition::PlusHalfPi, Transition::PlusHalfPi},    // 111
  }});
  return t;
}

MappingTable MappingTable::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open mapping table file: " + path);
  std::array<TransitionPair, 8> rows{};
  std::array<bool, 8> have{};
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string bits;
    int a = 0, b = 0;
    if (!(ls >> bits)) continue;
    require(static_cast<bool>(ls >> a >> b),
            "mapping row needs <bits> <first> <second>: " + line);
    require(bits.size() == 3 && bits.find_first_not_of("01") == std::string::npos,
            "mapping row bits must be three binary digits: " + bits);
    int idx = (bits[0] - '0') * 4 + (bits[1] - '0') * 2 + (bits[2] - '0');
    require(!have[idx], "duplicate mapping row for bits " + bits);
    rows[idx] = TransitionPair{transition_from_quarters(a), transition_from_quarters(b)};
    have[idx] = true;
  }
  for (bool h : have) require(h, "mapping table file must define all 8 rows");
  return from_rows(rows);
}

std::string MappingTable::to_text() const {
  std::ostringstream out;
  out << "# bits -> transition pair (quarter turns)\n";
  for (int i = 0; i < 8; ++i) {
    out << ((i >> 2) & 1) << ((i >> 1) & 1) << (i & 1) << ' '
        << quarters(rows_[i].first) << ' ' << quarters(rows_[i].second) << '\n';
  }
  return out.str();
}

std::optional<int> MappingTable::bits_for(const TransitionPair& p) const {
  for (int i = 0; i < 8; ++i) {
    if (rows_[i] == p) return i;
  }
  return std::nullopt;
}

const TransitionPair& MappingTable::terminal_pair(int prior_quarter, int bit) const {
  require(prior_quarter >= 0 && prior_quarter < 4, "prior quarter out of range");
  require(bit == 0 || bit == 1, "terminal bit must be 0 or 1");
  return terminal_[prior_quarter][bit];
}

std::optional<int> MappingTable::terminal_bit(int prior_quarter,
                                              const TransitionPair& p) const {
  require(prior_quarter >= 0 && prior_quarter < 4, "prior quarter out of range");
  if (terminal_[prior_quarter][0] == p) return 0;
  if (terminal_[prior_quarter][1] == p) return 1;
  return std::nullopt;
}

int bits_per_block(int k_b, bool cp_continuous) {
  require(k_b >= 2 && k_b % 2 == 0, "block size must be even and >= 2");
  if (cp_continuous) {
    require(k_b >= 4, "cp-continuous block needs at least 4 symbols");
    return 3 * k_b / 2 - 2;
  }
  return 3 * k_b / 2;
}

std::vector<Transition> MskBlock::steps_into() const {
  if (!cp_continuous) return transitions;
  std::vector<Transition> s(transitions.size());
  s[0] = transitions.back();
  std::copy(transitions.begin(), transitions.end() - 1, s.begin() + 1);
  return s;
}

MskBlock map_bits(std::span<const std::uint8_t> bits, const MappingTable& table,
                  bool cp_continuous, double start_phase) {
  const int nb = static_cast<int>(bits.size());
  const int k_b = cp_continuous ? 2 * (nb + 2) / 3 : 2 * nb / 3;
  const int expected = cp_continuous ? 3 * k_b / 2 - 2 : 3 * k_b / 2;
  require(nb == expected && k_b >= 2 && k_b % 2 == 0 && (!cp_continuous || k_b >= 4),
          "bit count does not form a whole block");
  for (auto b : bits) require(b <= 1, "bits must be 0/1");

  MskBlock blk;
  blk.cp_continuous = cp_continuous;
  blk.start_phase = start_phase;
  blk.bits.assign(bits.begin(), bits.end());
  blk.transitions.reserve(k_b);

  const int full_pairs = cp_continuous ? k_b / 2 - 1 : k_b / 2;
  int q = 0;  // accumulated quarter turns relative to the start phase
  std::vector<int> qs;
  qs.reserve(k_b);
  for (int i = 0; i < full_pairs; ++i) {
    int idx = bits[3 * i] * 4 + bits[3 * i + 1] * 2 + bits[3 * i + 2];
    const TransitionPair& p = table.pair_for(idx);
    blk.transitions.push_back(p.first);
    q += quarters(p.first);
    qs.push_back(q);
    blk.transitions.push_back(p.second);
    q += quarters(p.second);
    qs.push_back(q);
  }
  if (cp_continuous) {
    int prior = ((q % 4) + 4) % 4;
    const TransitionPair& p = table.terminal_pair(prior, bits[nb - 1]);
    blk.transitions.push_back(p.first);
    q += quarters(p.first);
    qs.push_back(q);
    blk.transitions.push_back(p.second);
    q += quarters(p.second);
    qs.push_back(q);
    require(((q % 4) + 4) % 4 == 0, "terminal pair must close the phase loop");
  }

  blk.phases.resize(k_b);
  blk.symbols.resize(k_b);
  if (cp_continuous) {
    // Internally one extra symbol: start, then k_b accumulated phases whose
    // last equals the start. Transmit the first k_b.
    blk.phases[0] = wrap_to_2pi(start_phase);
    for (int j = 1; j < k_b; ++j) {
      blk.phases[j] = wrap_to_2pi(start_phase + qs[j - 1] * half_pi);
    }
  } else {
    for (int j = 0; j < k_b; ++j) {
      blk.phases[j] = wrap_to_2pi(start_phase + qs[j] * half_pi);
    }
  }
  for (int j = 0; j < k_b; ++j) blk.symbols[j] = std::polar(1.0, blk.phases[j]);
  return blk;
}

std::vector<std::uint8_t> demap_transitions(std::span<const Transition> transitions,
                                            const MappingTable& table,
                                            bool cp_continuous) {
  const int k_b = static_cast<int>(transitions.size());
  require(k_b >= 2 && k_b % 2 == 0, "transition count must be even and >= 2");
  if (cp_continuous) require(k_b >= 4, "cp-continuous block needs at least 4 symbols");

  const int full_pairs = cp_continuous ? k_b / 2 - 1 : k_b / 2;
  std::vector<std::uint8_t> bits;
  bits.reserve(bits_per_block(k_b, cp_continuous));
  int q = 0;
  for (int i = 0; i < full_pairs; ++i) {
    TransitionPair p{transitions[2 * i], transitions[2 * i + 1]};
    auto idx = table.bits_for(p);
    if (!idx) {
      fail("transition pair at index " + std::to_string(2 * i) +
           " is not in the mapping table");
    }
    bits.push_back(static_cast<std::uint8_t>((*idx >> 2) & 1));
    bits.push_back(static_cast<std::uint8_t>((*idx >> 1) & 1));
    bits.push_back(static_cast<std::uint8_t>(*idx & 1));
    q += quarters(p.first) + quarters(p.second);
  }
  if (cp_continuous) {
    TransitionPair p{transitions[k_b - 2], transitions[k_b - 1]};
    auto bit = table.terminal_bit(((q % 4) + 4) % 4, p);
    if (!bit) fail("terminal transition pair does not close the phase loop");
    bits.push_back(static_cast<std::uint8_t>(*bit));
  }
  return bits;
}

double accumulate_phase(std::span<const Transition> transitions, double start_phase) {
  int q = 0;
  for (auto t : transitions) q += quarters(t);
  return wrap_to_2pi(start_phase + q * half_pi);
}

MappingMetric evaluate_mapping(const MappingTable& table) {
  // Symbol sequences for every 6-bit input, starting from quadrant 0.
  std::array<std::array<cd, 4>, 64> seq;
  for (int b = 0; b < 64; ++b) {
    const TransitionPair& p0 = table.pair_for(b >> 3);
    const TransitionPair& p1 = table.pair_for(b & 7);
    int q = 0;
    int k = 0;
    for (auto t : {p0.first, p0.second, p1.first, p1.second}) {
      q = (q + quarters(t) + 4) % 4;
      seq[b][k++] = kQuadrantSymbols[q];
    }
  }

  MappingMetric m;
  m.min_distance = 1e300;
  long hamming_sum = 0;
  for (int a = 0; a < 64; ++a) {
    for (int b = a + 1; b < 64; ++b) {
      double d2 = 0;
      for (int k = 0; k < 4; ++k) d2 += sqnorm(seq[a][k] - seq[b][k]);
      double d = std::sqrt(d2);
      if (d < m.min_distance - 1e-9) {
        m.min_distance = d;
        m.multiplicity = 0;
        m.min_hamming_at_min = 7;
        m.max_hamming_at_min = 0;
        hamming_sum = 0;
      }
      if (d < m.min_distance + 1e-9) {
        int h = std::popcount(static_cast<unsigned>(a ^ b));
        m.multiplicity += 1;
        hamming_sum += h;
        m.min_hamming_at_min = std::min(m.min_hamming_at_min, h);
        m.max_hamming_at_min = std::max(m.max_hamming_at_min, h);
      }
    }
  }
  m.mean_hamming_at_min =
      m.multiplicity ? static_cast<double>(hamming_sum) / m.multiplicity : 0.0;
  return m;
}

}  // namespace msk3

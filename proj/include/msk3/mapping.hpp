// Three-level constrained-phase mapping: bit triples to transition pairs,
// quarter-turn phase accumulation, and block framing with optional equal
// endpoints for cyclic-prefix phase continuity.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msk3/common.hpp"

namespace msk3 {

// Allowed inter-symbol phase steps, in quarter turns.
enum class Transition : std::int8_t {
  MinusHalfPi = -1,
  Zero = 0,
  PlusHalfPi = 1,
};

inline int quarters(Transition t) { return static_cast<int>(t); }
inline double phase_step(Transition t) { return quarters(t) * half_pi; }
Transition transition_from_quarters(int q);  // throws unless q in {-1,0,1}

struct TransitionPair {
  Transition first;
  Transition second;
  bool operator==(const TransitionPair&) const = default;
};

enum class MappingKind { Symmetric, NonSymmetric };

// Distance statistics over all pairs of distinct 6-bit inputs (two mapped
// transition pairs, four symbols from a common start phase).
struct MappingMetric {
  double min_distance = 0.0;       // minimum Euclidean distance between symbol sequences
  int min_hamming_at_min = 0;      // best-case bit damage at that distance
  int max_hamming_at_min = 0;      // worst-case bit damage at that distance
  double mean_hamming_at_min = 0;  // average bit damage over minimum-distance pairs
  int multiplicity = 0;            // number of input pairs at the minimum

  // Larger minimum distance wins; ties broken by smaller mean bit damage.
  bool better_than(const MappingMetric& o) const;
};

// Eight-row table from bit triples to transition pairs, plus the derived
// terminal rows used to force a block's phase back to its start value.
//
// Exactly one of the nine possible pairs is absent from the main table; it
// must be a zero-sum pair, and which one it is decides the table kind:
// (0,0) absent = Symmetric, otherwise NonSymmetric.
class MappingTable {
 public:
  static const MappingTable& symmetric();
  static const MappingTable& non_symmetric();
  static MappingTable from_rows(const std::array<TransitionPair, 8>& rows);

  // Text format: 8 lines "<b2b1b0> <first> <second>" with transitions
  // written as -1/0/+1 (quarter turns); '#' comments allowed.
  static MappingTable load(const std::string& path);
  std::string to_text() const;

  const TransitionPair& pair_for(int bits3) const { return rows_[bits3]; }
  std::optional<int> bits_for(const TransitionPair& p) const;

  // Terminal rows: prior phase as quarter turns mod 4 relative to the block
  // start (0, 1 = +pi/2, 2 = pi, 3 = -pi/2), one bit selects between the two
  // transition pairs that return the accumulated phase to zero.
  const TransitionPair& terminal_pair(int prior_quarter, int bit) const;
  std::optional<int> terminal_bit(int prior_quarter, const TransitionPair& p) const;

  MappingKind kind() const { return kind_; }
  const TransitionPair& avoided_pair() const { return avoided_; }

 private:
  MappingTable() = default;
  std::array<TransitionPair, 8> rows_{};
  std::array<std::array<TransitionPair, 2>, 4> terminal_{};
  TransitionPair avoided_{};
  MappingKind kind_ = MappingKind::Symmetric;
};

// One mapped block of K symbols.
struct MskBlock {
  std::vector<double> phases;          // transmitted phases, wrapped to [0, 2pi)
  std::vector<cd> symbols;             // exp(j*phase)
  std::vector<Transition> transitions; // mapping order, K entries
  std::vector<std::uint8_t> bits;      // the bits that produced the block
  bool cp_continuous = false;
  double start_phase = 0.0;

  int size() const { return static_cast<int>(phases.size()); }

  // Phase steps aligned to transmitted positions with circular indexing:
  // steps_into()[j] is the step from phases[j-1 mod K] into phases[j]. For a
  // cp-continuous block this is the mapping-order list rotated right by one
  // (the block is truly cyclic); otherwise it is the mapping-order list, with
  // entry 0 standing in for the unconstrained wrap step.
  std::vector<Transition> steps_into() const;
};

// Bits consumed by one block of k_b symbols: 3*k_b/2, minus 2 when the block
// is cp-continuous (the last transition pair carries a single bit).
int bits_per_block(int k_b, bool cp_continuous);

// Map a bit stream segment onto one block. Bit count must equal
// bits_per_block(k_b, cp_continuous) for an even k_b (>= 4 when continuous).
MskBlock map_bits(std::span<const std::uint8_t> bits, const MappingTable& table,
                  bool cp_continuous, double start_phase = 0.0);

// Inverse of map_bits on the transition sequence. Throws std::invalid_argument
// when a pair is not in the table (e.g. (0,0) under the symmetric mapping) or
// the terminal pair does not match the accumulated prior phase.
std::vector<std::uint8_t> demap_transitions(std::span<const Transition> transitions,
                                            const MappingTable& table,
                                            bool cp_continuous);

// Phase after applying the transitions from start_phase, wrapped to [0, 2pi).
double accumulate_phase(std::span<const Transition> transitions, double start_phase);

// Brute-force distance scan over all distinct 6-bit input pairs.
MappingMetric evaluate_mapping(const MappingTable& table);

}  // namespace msk3

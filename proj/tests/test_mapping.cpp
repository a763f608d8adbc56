#include <doctest.h>

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "msk3/mapping.hpp"
#include "test_util.hpp"

using namespace msk3;

namespace {

TransitionPair tp(int a, int b) {
  return {transition_from_quarters(a), transition_from_quarters(b)};
}

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("tables map bit triples to the fixed transition pairs") {
  const std::array<TransitionPair, 8> rows = {tp(-1, +1), tp(+1, -1), tp(-1, 0),
                                              tp(0, -1),  tp(0, +1),  tp(+1, 0),
                                              tp(-1, -1), tp(+1, +1)};
  const auto& sm = MappingTable::symmetric();
  for (int b = 0; b < 8; ++b) {
    CHECK(sm.pair_for(b) == rows[b]);
    CHECK(sm.bits_for(rows[b]) == b);
  }
  CHECK(sm.kind() == MappingKind::Symmetric);
  CHECK(sm.avoided_pair() == tp(0, 0));
  CHECK_FALSE(sm.bits_for(tp(0, 0)).has_value());

  // Non-symmetric variant keeps every row except 001, which trades the
  // (+,-) pair for the double zero step.
  const auto& nsm = MappingTable::non_symmetric();
  for (int b = 0; b < 8; ++b) {
    if (b != 1) CHECK(nsm.pair_for(b) == rows[b]);
  }
  CHECK(nsm.pair_for(1) == tp(0, 0));
  CHECK(nsm.kind() == MappingKind::NonSymmetric);
  CHECK(nsm.avoided_pair() == tp(+1, -1));
  CHECK_FALSE(nsm.bits_for(tp(+1, -1)).has_value());
}

TEST_CASE("from_rows rejects duplicate rows and nonzero-sum leftovers") {
  auto rows = std::array<TransitionPair, 8>{tp(-1, +1), tp(+1, -1), tp(-1, 0),
                                            tp(0, -1),  tp(0, +1),  tp(+1, 0),
                                            tp(-1, -1), tp(+1, +1)};
  rows[7] = rows[6];
  CHECK_THROWS_AS(MappingTable::from_rows(rows), std::invalid_argument);
  // leaving out (+1,+1) makes the avoided pair carry a net phase step
  rows[6] = tp(0, 0);
  rows[7] = tp(-1, -1);
  CHECK_THROWS_AS(MappingTable::from_rows(rows), std::invalid_argument);
}

TEST_CASE("terminal rows cancel the prior phase, bit 0 takes the lower first step") {
  for (const auto* t : {&MappingTable::symmetric(), &MappingTable::non_symmetric()}) {
    for (int prior = 0; prior < 4; ++prior) {
      const auto& p0 = t->terminal_pair(prior, 0);
      const auto& p1 = t->terminal_pair(prior, 1);
      CHECK_FALSE(p0 == p1);
      for (int bit = 0; bit < 2; ++bit) {
        const auto& p = t->terminal_pair(prior, bit);
        const int total = prior + quarters(p.first) + quarters(p.second);
        CHECK((total % 4 + 4) % 4 == 0);
        CHECK(t->terminal_bit(prior, p) == bit);
      }
      CHECK(quarters(p0.first) <= quarters(p1.first));
    }
  }
  const auto& sm = MappingTable::symmetric();
  CHECK(sm.terminal_pair(0, 0) == tp(-1, +1));
  CHECK(sm.terminal_pair(0, 1) == tp(+1, -1));
  CHECK(sm.terminal_pair(1, 0) == tp(-1, 0));
  CHECK(sm.terminal_pair(1, 1) == tp(0, -1));
  CHECK(sm.terminal_pair(2, 0) == tp(-1, -1));
  CHECK(sm.terminal_pair(2, 1) == tp(+1, +1));
  CHECK(sm.terminal_pair(3, 0) == tp(0, +1));
  CHECK(sm.terminal_pair(3, 1) == tp(+1, 0));
  // the non-symmetric table swaps in its zero pair where (+,-) would close
  CHECK(MappingTable::non_symmetric().terminal_pair(0, 1) == tp(0, 0));
  // pairs that do not cancel the prior phase are not terminal options
  CHECK_FALSE(sm.terminal_bit(1, tp(+1, +1)).has_value());
  CHECK_THROWS_AS(sm.terminal_pair(4, 0), std::invalid_argument);
  CHECK_THROWS_AS(sm.terminal_pair(0, 2), std::invalid_argument);
}

TEST_CASE("bit budget per block") {
  CHECK(bits_per_block(2, false) == 3);
  CHECK(bits_per_block(4, false) == 6);
  CHECK(bits_per_block(4, true) == 4);
  CHECK(bits_per_block(12, false) == 18);
  CHECK(bits_per_block(12, true) == 16);
  CHECK(bits_per_block(256, true) == 382);
  CHECK_THROWS_AS(bits_per_block(3, false), std::invalid_argument);
  CHECK_THROWS_AS(bits_per_block(0, false), std::invalid_argument);
  CHECK_THROWS_AS(bits_per_block(2, true), std::invalid_argument);
}

TEST_CASE("map_bits walks quarter-turn phases from the start value") {
  const auto& sm = MappingTable::symmetric();

  const std::vector<std::uint8_t> zeros = {0, 0, 0};
  MskBlock blk = map_bits(zeros, sm, false);
  REQUIRE(blk.size() == 2);
  CHECK(blk.transitions[0] == Transition::MinusHalfPi);
  CHECK(blk.transitions[1] == Transition::PlusHalfPi);
  CHECK(blk.phases[0] == doctest::Approx(3 * kPi / 2));
  CHECK(blk.phases[1] == doctest::Approx(0.0));
  CHECK(blk.symbols[0].imag() == doctest::Approx(-1.0));
  CHECK(blk.symbols[1].real() == doctest::Approx(1.0));

  const std::vector<std::uint8_t> ones = {1, 1, 1, 1, 1, 1};
  blk = map_bits(ones, sm, false);
  REQUIRE(blk.size() == 4);
  CHECK(blk.phases[0] == doctest::Approx(kPi / 2));
  CHECK(blk.phases[1] == doctest::Approx(kPi));
  CHECK(blk.phases[2] == doctest::Approx(3 * kPi / 2));
  CHECK(blk.phases[3] == doctest::Approx(0.0));

  const std::vector<std::uint8_t> z6 = {0, 0, 0, 0, 0, 0};
  blk = map_bits(z6, sm, false);
  CHECK(blk.phases[0] == doctest::Approx(3 * kPi / 2));
  CHECK(blk.phases[1] == doctest::Approx(0.0));
  CHECK(blk.phases[2] == doctest::Approx(3 * kPi / 2));
  CHECK(blk.phases[3] == doctest::Approx(0.0));

  // an arbitrary start phase shifts every sample and stays wrapped
  blk = map_bits(z6, sm, false, 0.3);
  CHECK(blk.phases[0] == doctest::Approx(0.3 + 3 * kPi / 2));
  CHECK(blk.phases[1] == doctest::Approx(0.3));
  for (double p : blk.phases) {
    CHECK(p >= 0.0);
    CHECK(p < 2 * kPi);
  }

  CHECK_THROWS_AS(map_bits(std::vector<std::uint8_t>{0, 1}, sm, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(map_bits(std::vector<std::uint8_t>{0, 1, 2}, sm, false),
                  std::invalid_argument);
}

TEST_CASE("cp-continuous blocks start at the start phase and close the loop") {
  const auto& sm = MappingTable::symmetric();
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    auto bits = testutil::random_bits(bits_per_block(12, true), seed);
    MskBlock blk = map_bits(bits, sm, true, 0.7);
    REQUIRE(blk.size() == 12);
    CHECK(blk.cp_continuous);
    CHECK(blk.phases[0] == doctest::Approx(wrap_to_2pi(0.7)));
    // total quarter-turn budget returns to the start
    CHECK(accumulate_phase(blk.transitions, 0.7) == doctest::Approx(wrap_to_2pi(0.7)));
    // steps_into is the transition list rotated right by one and is circular
    auto steps = blk.steps_into();
    REQUIRE(steps.size() == blk.transitions.size());
    CHECK(steps[0] == blk.transitions.back());
    for (std::size_t j = 1; j < steps.size(); ++j) {
      CHECK(steps[j] == blk.transitions[j - 1]);
      CHECK(blk.phases[j] ==
            doctest::Approx(wrap_to_2pi(blk.phases[j - 1] + phase_step(steps[j]))));
    }
    CHECK(blk.phases[0] ==
          doctest::Approx(wrap_to_2pi(blk.phases.back() + phase_step(steps[0]))));
  }
  // without the endpoint constraint steps_into is just the mapping order
  auto bits = testutil::random_bits(bits_per_block(8, false), 9);
  MskBlock open = map_bits(bits, sm, false);
  CHECK(open.steps_into() == open.transitions);
}

TEST_CASE("map and demap are inverses") {
  for (const auto* t : {&MappingTable::symmetric(), &MappingTable::non_symmetric()}) {
    for (bool cont : {false, true}) {
      for (int k_b : {4, 12, 26}) {
        const int nb = bits_per_block(k_b, cont);
        for (int trial = 0; trial < 250; ++trial) {
          auto bits = testutil::random_bits(nb, 1000 * k_b + trial + (cont ? 7 : 0));
          MskBlock blk = map_bits(bits, *t, cont, 0.25 * trial);
          CHECK(demap_transitions(blk.transitions, *t, cont) == bits);
        }
      }
    }
  }
}

TEST_CASE("demap rejects pairs outside the table") {
  const auto& sm = MappingTable::symmetric();
  const std::vector<Transition> zz = {Transition::Zero, Transition::Zero};
  CHECK_THROWS_AS(demap_transitions(zz, sm, false), std::invalid_argument);
  // same pair is legal under the non-symmetric table
  CHECK(demap_transitions(zz, MappingTable::non_symmetric(), false) ==
        std::vector<std::uint8_t>{0, 0, 1});
  // terminal pair that fails to close the accumulated phase
  const std::vector<Transition> open = {Transition::PlusHalfPi, Transition::PlusHalfPi,
                                        Transition::PlusHalfPi, Transition::Zero};
  CHECK_THROWS_AS(demap_transitions(open, sm, true), std::invalid_argument);
}

TEST_CASE("accumulate_phase sums quarter turns") {
  using T = Transition;
  const std::vector<T> up2 = {T::PlusHalfPi, T::PlusHalfPi};
  CHECK(accumulate_phase(up2, 0.0) == doctest::Approx(kPi));
  const std::vector<T> mix = {T::PlusHalfPi, T::MinusHalfPi, T::Zero};
  CHECK(accumulate_phase(mix, kPi) == doctest::Approx(kPi));
  CHECK(accumulate_phase(std::vector<T>{}, 1.25) == doctest::Approx(1.25));
}

TEST_CASE("distance scan: both tables reach the same minimum, bit damage differs") {
  const auto sm = evaluate_mapping(MappingTable::symmetric());
  CHECK(sm.min_distance == doctest::Approx(std::numbers::sqrt2).epsilon(1e-12));
  CHECK(sm.multiplicity == 80);
  CHECK(sm.min_hamming_at_min == 1);
  CHECK(sm.max_hamming_at_min == 3);
  CHECK(sm.mean_hamming_at_min == doctest::Approx(1.3).epsilon(1e-12));

  const auto nsm = evaluate_mapping(MappingTable::non_symmetric());
  CHECK(nsm.min_distance == doctest::Approx(std::numbers::sqrt2).epsilon(1e-12));
  CHECK(nsm.multiplicity == 113);
  CHECK(nsm.max_hamming_at_min == 4);
  CHECK(sm.better_than(nsm));
  CHECK_FALSE(nsm.better_than(sm));

  // scrambling which triple labels which pair keeps the distance profile but
  // raises the bit damage per minimum-distance event
  const auto alt = evaluate_mapping(MappingTable::from_rows(
      {tp(+1, +1), tp(-1, +1), tp(+1, -1), tp(-1, 0), tp(0, -1), tp(0, +1),
       tp(+1, 0), tp(-1, -1)}));
  CHECK(alt.min_distance == doctest::Approx(std::numbers::sqrt2).epsilon(1e-12));
  CHECK(alt.mean_hamming_at_min == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(sm.better_than(alt));
  CHECK_FALSE(alt.better_than(sm));
}

TEST_CASE("table text round trips through load") {
  const auto& sm = MappingTable::symmetric();
  const std::string path = "mapping_rt.txt";
  {
    std::ofstream out(path);
    out << sm.to_text();
  }
  MappingTable loaded = MappingTable::load(path);
  for (int b = 0; b < 8; ++b) CHECK(loaded.pair_for(b) == sm.pair_for(b));
  CHECK(loaded.kind() == MappingKind::Symmetric);

  // comments, blank lines and reordered rows are fine
  {
    std::ofstream out(path);
    out << "# reordered\n\n111 1 1  # inline comment\n";
    for (int b = 6; b >= 0; --b) {
      out << ((b >> 2) & 1) << ((b >> 1) & 1) << (b & 1) << ' '
          << quarters(sm.pair_for(b).first) << ' ' << quarters(sm.pair_for(b).second)
          << '\n';
    }
  }
  loaded = MappingTable::load(path);
  for (int b = 0; b < 8; ++b) CHECK(loaded.pair_for(b) == sm.pair_for(b));

  auto write = [&](const std::string& body) {
    std::ofstream out(path);
    out << body;
  };
  write("000 -1 1\n");  // incomplete table
  CHECK_THROWS_AS(MappingTable::load(path), std::invalid_argument);
  write("00x -1 1\n");  // bad bit label
  CHECK_THROWS_AS(MappingTable::load(path), std::invalid_argument);
  write("000 -1\n");  // missing column
  CHECK_THROWS_AS(MappingTable::load(path), std::invalid_argument);
  write("000 -1 1\n000 1 -1\n");  // duplicate bits
  CHECK_THROWS_AS(MappingTable::load(path), std::invalid_argument);
  write(sm.to_text() + "000 -1 2\n");  // transition out of range
  CHECK_THROWS_AS(MappingTable::load(path), std::invalid_argument);
  CHECK_THROWS_AS(MappingTable::load("does_not_exist.txt"), std::invalid_argument);
}

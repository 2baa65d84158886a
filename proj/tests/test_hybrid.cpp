#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <vector>

#include "cimsim/acim.hpp"
#include "cimsim/core.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/hybrid.hpp"
#include "cimsim/rng.hpp"

using namespace cimsim;

namespace {

MacroInstance noisy_instance(double sigma_lsb) {
  AnalogConfig cfg;
  cfg.rows = 16;
  cfg.adc_resolution = 8;
  cfg.noise_sigma_lsb = sigma_lsb;
  cfg.seed = 3;
  return MacroInstance(cfg);
}

}  // namespace

TEST_CASE("straight splits put high-significance pairs in digital") {
  const DomainAssignment all_dig = DomainAssignment::straight_split(4, 4, 0);
  CHECK(all_dig.digital_pairs() == 16);
  const DomainAssignment all_ana = DomainAssignment::straight_split(4, 4, 7);
  CHECK(all_ana.digital_pairs() == 0);

  const DomainAssignment mixed = DomainAssignment::straight_split(4, 4, 4);
  CHECK(mixed.digital_pairs() == 6);
  for (int j = 0; j < 4; j++) {
    for (int k = 0; k < 4; k++) {
      const Domain want = j + k >= 4 ? Domain::Digital : Domain::Analog;
      CHECK(mixed.at(j, k) == want);
    }
  }

  CHECK_THROWS_AS(DomainAssignment::straight_split(4, 4, -1), RangeError);
  CHECK_THROWS_AS(DomainAssignment::straight_split(4, 4, 8), RangeError);
  CHECK_THROWS_AS(DomainAssignment(0, 4, Domain::Digital), ShapeError);
  CHECK_THROWS_AS(mixed.at(4, 0), RangeError);
  CHECK_THROWS_AS(mixed.at(0, -1), RangeError);
}

TEST_CASE("explicit maps must cover the grid exactly") {
  std::map<std::pair<int, int>, Domain> pairs{
      {{0, 0}, Domain::Analog},
      {{0, 1}, Domain::Digital},
      {{1, 0}, Domain::Digital},
      {{1, 1}, Domain::Digital},
  };
  const DomainAssignment a = DomainAssignment::explicit_map(2, 2, pairs);
  CHECK(a.digital_pairs() == 3);
  CHECK(a.at(0, 0) == Domain::Analog);

  pairs.erase({1, 1});
  CHECK_THROWS_AS(DomainAssignment::explicit_map(2, 2, pairs), ShapeError);
  pairs[{2, 0}] = Domain::Digital;  // out of the 2x2 grid
  CHECK_THROWS_AS(DomainAssignment::explicit_map(2, 2, pairs), RangeError);
}

TEST_CASE("hybrid endpoints match the pure digital and analog macs") {
  const MacroInstance inst = noisy_instance(1.5);
  const DomainAssignment all_dig = DomainAssignment::straight_split(4, 4, 0);
  const DomainAssignment all_ana = DomainAssignment::straight_split(4, 4, 7);
  Rng rng(0x61);
  for (u64 trial = 0; trial < 200; trial++) {
    const QuantVector in = QuantVector::random(rng, 16, 4, true);
    const QuantVector w = QuantVector::random(rng, 16, 4, true);

    const MacResult dig = hybrid_mac(in, w, all_dig, inst, trial);
    CHECK(dig.value == dot_oracle(in, w));
    CHECK(dig.conversions == 0);
    CHECK(dig.adc_energy == 0);

    // All-analog routing reproduces acim_mac conversion for conversion
    // because the noise is keyed by (trial, plane pair), not call order.
    const MacResult ana = hybrid_mac(in, w, all_ana, inst, trial);
    const MacResult ref = acim_mac(in, w, inst, trial);
    CHECK(ana.value == ref.value);
    CHECK(ana.conversions == ref.conversions);
    CHECK(ana.saturated == ref.saturated);
    CHECK(ana.adc_energy == ref.adc_energy);
  }
}

TEST_CASE("error grows as the boundary pushes pairs into analog") {
  // sigma_abs = 8*16/255 = 0.50, so quantized readouts flip integers often
  const MacroInstance inst = noisy_instance(8.0);
  Rng rng(0x62);
  std::vector<QuantVector> ins;
  std::vector<QuantVector> ws;
  for (int t = 0; t < 400; t++) {
    ins.push_back(QuantVector::random(rng, 16, 4, true));
    ws.push_back(QuantVector::random(rng, 16, 4, true));
  }
  auto mean_abs_error = [&](int boundary) {
    const DomainAssignment split = DomainAssignment::straight_split(4, 4, boundary);
    double total = 0;
    for (std::size_t t = 0; t < ins.size(); t++) {
      const i64 got = hybrid_mac(ins[t], ws[t], split, inst, t).value;
      total += std::llabs(got - dot_oracle(ins[t], ws[t]));
    }
    return total / static_cast<double>(ins.size());
  };
  const double e0 = mean_abs_error(0);
  const double e4 = mean_abs_error(4);
  const double e7 = mean_abs_error(7);
  CHECK(e0 == 0.0);
  CHECK(e4 > 0.0);
  CHECK(e4 < e7);
}

TEST_CASE("hybrid mac validates mode and shapes") {
  AnalogConfig cfg;
  cfg.rows = 16;
  cfg.mode = AnalogMode::BitParallel;
  const MacroInstance parallel(cfg);
  Rng rng(0x63);
  const QuantVector in = QuantVector::random(rng, 16, 4, true);
  const QuantVector w = QuantVector::random(rng, 16, 4, true);
  const DomainAssignment split = DomainAssignment::straight_split(4, 4, 2);
  CHECK_THROWS_AS(hybrid_mac(in, w, split, parallel), ConfigError);

  const MacroInstance inst = noisy_instance(0);
  const QuantVector short_in = QuantVector::random(rng, 8, 4, true);
  const QuantVector short_w = QuantVector::random(rng, 8, 4, true);
  CHECK_THROWS_AS(hybrid_mac(short_in, short_w, split, inst), ShapeError);
  const DomainAssignment wrong = DomainAssignment::straight_split(3, 4, 2);
  CHECK_THROWS_AS(hybrid_mac(in, w, wrong, inst), ShapeError);
}

TEST_CASE("saliency preview walks pairs in significance order") {
  // in = [3,1]: plane0 [1,1], plane1 [1,0]; w = [2,3]: plane0 [0,1], plane1 [1,1]
  const QuantVector in({3, 1}, 2, false);
  const QuantVector w({2, 3}, 2, false);
  const std::array<QuantVector, 1> ins{in};
  const std::array<QuantVector, 1> ws{w};
  CHECK(ose_saliency(ins, ws, 1).score == 4);  // (1,1) only
  CHECK(ose_saliency(ins, ws, 2).score == 4);  // + (1,0), empty overlap
  CHECK(ose_saliency(ins, ws, 3).score == 8);  // + (0,1)
  CHECK(ose_saliency(ins, ws, 4).score == 9);  // full preview = |dot|
  CHECK(ose_saliency(ins, ws, 4).pairs_evaluated == 4);
  CHECK(dot_oracle(in, w) == 9);
}

TEST_CASE("full saliency equals summed absolute oracle dots") {
  Rng rng(0x64);
  std::vector<QuantVector> ins;
  std::vector<QuantVector> ws;
  i64 expected = 0;
  for (int c = 0; c < 5; c++) {
    ins.push_back(QuantVector::random(rng, 8, 4, false));
    ws.push_back(QuantVector::random(rng, 8, 4, true));
    expected += std::llabs(dot_oracle(ins.back(), ws.back()));
  }
  const SaliencyScore got = ose_saliency(ins, ws, 16);
  CHECK(got.score == expected);
  CHECK(got.pairs_evaluated == 16);

  // Channels take the absolute value individually: opposite signs add up.
  const QuantVector pos_in({1}, 1, false);
  const QuantVector pos_w({3}, 3, true);
  const QuantVector neg_w({-4}, 3, true);
  const std::array<QuantVector, 2> two_ins{pos_in, pos_in};
  const std::array<QuantVector, 2> two_ws{pos_w, neg_w};
  CHECK(ose_saliency(two_ins, two_ws, 3).score == 7);

  const std::vector<QuantVector> empty;
  CHECK_THROWS_AS(ose_saliency(empty, empty, 1), ShapeError);
  const std::array<QuantVector, 1> one_in{pos_in};
  const std::array<QuantVector, 1> longer_w{QuantVector({1, 1}, 3, true)};
  CHECK_THROWS_AS(ose_saliency(one_in, longer_w, 1), ShapeError);
  const std::array<QuantVector, 2> mixed_ws{pos_w, QuantVector({1}, 2, true)};
  CHECK_THROWS_AS(ose_saliency(two_ins, mixed_ws, 1), ShapeError);
  CHECK_THROWS_AS(ose_saliency(one_in, one_in, 0), RangeError);
  CHECK_THROWS_AS(ose_saliency(one_in, one_in, 2), RangeError);
}

TEST_CASE("boundary ladder walks down as the score climbs") {
  const std::array<i64, 2> thresholds{10, 100};
  const std::array<int, 3> ladder{8, 4, 0};
  CHECK(select_boundary(5, thresholds, ladder) == 8);
  CHECK(select_boundary(10, thresholds, ladder) == 4);
  CHECK(select_boundary(99, thresholds, ladder) == 4);
  CHECK(select_boundary(100, thresholds, ladder) == 0);
  CHECK(select_boundary(100000, thresholds, ladder) == 0);

  // Ladder index is monotone in the score.
  int prev = select_boundary(0, thresholds, ladder);
  for (i64 s = 1; s <= 200; s++) {
    const int cur = select_boundary(s, thresholds, ladder);
    CHECK(cur <= prev);
    prev = cur;
  }

  const std::array<int, 1> single{6};
  const std::array<i64, 0> none{};
  CHECK(select_boundary(123, none, single) == 6);

  const std::array<int, 2> short_ladder{8, 4};
  CHECK_THROWS_AS(select_boundary(5, thresholds, short_ladder), ShapeError);
  const std::array<i64, 2> flat{10, 10};
  CHECK_THROWS_AS(select_boundary(5, flat, ladder), ConfigError);
}

TEST_CASE("threshold calibration picks order statistics") {
  const std::array<i64, 5> scores{5, 1, 9, 3, 7};
  const std::array<double, 5> quantiles{0.0, 0.2, 0.21, 0.5, 1.0};
  const std::vector<i64> got = calibrate_thresholds(scores, quantiles);
  CHECK(got == std::vector<i64>{1, 1, 3, 5, 9});

  // Against a brute-force oracle on random data.
  Rng rng(0x65);
  std::vector<i64> big;
  for (int i = 0; i < 100; i++) big.push_back(static_cast<i64>(rng.next_below(1000)));
  std::vector<i64> sorted = big;
  std::sort(sorted.begin(), sorted.end());
  const std::array<double, 5> qs{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<i64> cal = calibrate_thresholds(big, qs);
  for (std::size_t i = 0; i < qs.size(); i++) {
    const double rank = std::ceil(qs[i] * 100.0);
    const std::size_t idx = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
    CHECK(cal[i] == sorted[idx]);
  }

  const std::array<double, 1> bad_q{1.5};
  CHECK_THROWS_AS(calibrate_thresholds(scores, bad_q), RangeError);
  const std::vector<i64> no_scores;
  CHECK_THROWS_AS(calibrate_thresholds(no_scores, qs), ShapeError);
}

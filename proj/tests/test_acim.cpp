#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "cimsim/acim.hpp"
#include "cimsim/core.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"

using namespace cimsim;

namespace {

AnalogConfig base_config(std::size_t rows, int resolution) {
  AnalogConfig cfg;
  cfg.rows = rows;
  cfg.adc_resolution = resolution;
  return cfg;
}

QuantVector ones_vector(std::size_t n, std::size_t ones) {
  std::vector<i64> v(n, 0);
  for (std::size_t i = 0; i < ones; i++) v[i] = 1;
  return QuantVector(v, 1, false);
}

}  // namespace

TEST_CASE("adc codes are mid-tread with ties to even") {
  CHECK(adc_quantize(0.0, 8, 255.0).code == 0);
  CHECK(adc_quantize(100.0, 8, 255.0).code == 100);
  CHECK(adc_quantize(100.0, 8, 255.0).dequantized == doctest::Approx(100.0));
  CHECK_FALSE(adc_quantize(255.0, 8, 255.0).saturated);
  CHECK(adc_quantize(256.0, 8, 255.0).code == 255);
  CHECK(adc_quantize(256.0, 8, 255.0).saturated);
  CHECK(adc_quantize(-0.4, 8, 255.0).code == 0);
  CHECK_FALSE(adc_quantize(-0.4, 8, 255.0).saturated);
  CHECK(adc_quantize(-1.0, 8, 255.0).saturated);

  // Half-code inputs with full_scale == steps round to the even neighbor.
  CHECK(adc_quantize(0.5, 4, 15.0).code == 0);
  CHECK(adc_quantize(1.5, 4, 15.0).code == 2);
  CHECK(adc_quantize(2.5, 4, 15.0).code == 2);
  CHECK(adc_quantize(3.5, 4, 15.0).code == 4);

  // Dequantization rescales the code back to the input range.
  const AdcReading r = adc_quantize(4.0, 2, 6.0);
  CHECK(r.code == 2);
  CHECK(r.dequantized == doctest::Approx(4.0));

  CHECK_THROWS_AS(adc_quantize(1.0, 0, 4.0), RangeError);
  CHECK_THROWS_AS(adc_quantize(1.0, 49, 4.0), RangeError);
  CHECK_THROWS_AS(adc_quantize(1.0, 8, 0.0), RangeError);
  CHECK_THROWS_AS(adc_quantize(1.0, 8, -3.0), RangeError);
}

TEST_CASE("lossless resolution covers every popcount") {
  CHECK(lossless_adc_resolution(1) == 1);
  CHECK(lossless_adc_resolution(2) == 2);
  CHECK(lossless_adc_resolution(3) == 2);
  CHECK(lossless_adc_resolution(4) == 3);
  CHECK(lossless_adc_resolution(64) == 7);
  CHECK(lossless_adc_resolution(255) == 8);
  CHECK(lossless_adc_resolution(256) == 9);
  CHECK_THROWS_AS(lossless_adc_resolution(0), RangeError);
}

TEST_CASE("sparsity bound and energy proxy") {
  CHECK(sparsity_known_zero_bits(60, 8, 256.0) == 2);
  CHECK(sparsity_known_zero_bits(0, 8, 256.0) == 8);
  CHECK(sparsity_known_zero_bits(1, 8, 256.0) == 7);
  CHECK(sparsity_known_zero_bits(256, 8, 256.0) == 0);
  CHECK_THROWS_AS(sparsity_known_zero_bits(-1, 8, 256.0), RangeError);
  CHECK_THROWS_AS(sparsity_known_zero_bits(300, 8, 256.0), RangeError);

  const std::array<int, 3> bits{8, 8, 6};
  CHECK(adc_energy_proxy(bits) == 22);
  const std::array<int, 1> bad{-1};
  CHECK_THROWS_AS(adc_energy_proxy(bad), RangeError);
}

TEST_CASE("config validation and absolute noise scale") {
  CHECK_THROWS_AS(MacroInstance(base_config(0, 8)), ConfigError);
  CHECK_THROWS_AS(MacroInstance(base_config(4, 0)), ConfigError);
  CHECK_THROWS_AS(MacroInstance(base_config(4, 25)), ConfigError);
  AnalogConfig bad = base_config(4, 8);
  bad.noise_sigma_lsb = -1;
  CHECK_THROWS_AS(MacroInstance{bad}, ConfigError);
  bad = base_config(4, 8);
  bad.dac_bits = 0;
  CHECK_THROWS_AS(MacroInstance{bad}, ConfigError);
  bad.dac_bits = 17;
  CHECK_THROWS_AS(MacroInstance{bad}, ConfigError);

  AnalogConfig cfg = base_config(64, 8);
  cfg.noise_sigma_lsb = 2.0;
  CHECK(cfg.sigma_abs() == doctest::Approx(2.0 * 64.0 / 255.0));

  CHECK(analog_mode_from_string("bit-serial") == AnalogMode::BitSerial);
  CHECK(to_string(AnalogMode::OneShotMultiBit) == "one-shot");
  CHECK_THROWS_AS(analog_mode_from_string("weird"), ConfigError);
  CHECK(readout_from_string("ideal") == Readout::Ideal);
  CHECK_THROWS_AS(readout_from_string("weird"), ConfigError);
}

TEST_CASE("static gains are frozen per instance seed") {
  AnalogConfig cfg = base_config(16, 8);
  const MacroInstance clean(cfg);
  for (std::size_t i = 0; i < 16; i++) CHECK(clean.cell_gain(i) == 1.0);
  CHECK(clean.plane_gain(0) == 1.0);

  cfg.mismatch_sigma = 0.1;
  cfg.cap_weight_sigma = 0.05;
  cfg.seed = 99;
  const MacroInstance a(cfg);
  const MacroInstance b(cfg);
  bool any_off_one = false;
  for (std::size_t i = 0; i < 16; i++) {
    CHECK(a.cell_gain(i) == b.cell_gain(i));
    if (a.cell_gain(i) != 1.0) any_off_one = true;
  }
  CHECK(any_off_one);
  CHECK(a.plane_gain(3) == b.plane_gain(3));
  CHECK(a.plane_gain(3) != 1.0);

  cfg.seed = 100;
  const MacroInstance c(cfg);
  CHECK(c.cell_gain(0) != a.cell_gain(0));

  CHECK_THROWS_AS(a.cell_gain(16), RangeError);
  CHECK_THROWS_AS(a.plane_gain(-1), RangeError);
  CHECK_THROWS_AS(a.plane_gain(32), RangeError);
}

TEST_CASE("noiseless bit-serial mac is bit-exact at lossless resolution") {
  AnalogConfig cfg = base_config(16, lossless_adc_resolution(16));
  const MacroInstance inst(cfg);
  Rng rng(0x51);
  for (int rep = 0; rep < 300; rep++) {
    const QuantVector in = QuantVector::random(rng, 16, 4, true);
    const QuantVector w = QuantVector::random(rng, 16, 4, true);
    const MacResult res = acim_mac(in, w, inst, rep);
    CHECK(res.value == dot_oracle(in, w));
    CHECK(res.saturated == 0);
    CHECK(res.conversions == 16);
  }
  // Energy proxy: every conversion resolves the full resolution.
  const QuantVector in = QuantVector::random(rng, 16, 4, true);
  const QuantVector w = QuantVector::random(rng, 16, 4, true);
  CHECK(acim_mac(in, w, inst).adc_energy == 16u * 5u);

  // Oversized resolution stays exact: full scale under half an LSB per step.
  const MacroInstance wide(base_config(16, 8));
  for (int rep = 0; rep < 100; rep++) {
    const QuantVector a = QuantVector::random(rng, 16, 3, false);
    const QuantVector b = QuantVector::random(rng, 16, 5, true);
    CHECK(acim_mac(a, b, wide, rep).value == dot_oracle(a, b));
  }

  CHECK_THROWS_AS(acim_mac(QuantVector({1, 0, 1}, 1, false),
                           QuantVector({1, 1, 1}, 1, false), inst),
                  ShapeError);
}

TEST_CASE("noiseless bit-parallel mac is bit-exact") {
  AnalogConfig cfg = base_config(16, lossless_adc_resolution(16));
  cfg.mode = AnalogMode::BitParallel;
  cfg.dac_bits = 4;
  const MacroInstance inst(cfg);
  Rng rng(0x52);
  for (int rep = 0; rep < 300; rep++) {
    const QuantVector in = QuantVector::random(rng, 16, 4, false);
    const QuantVector w = QuantVector::random(rng, 16, 5, true);
    const MacResult res = acim_mac(in, w, inst, rep);
    CHECK(res.value == dot_oracle(in, w));
    CHECK(res.conversions == 5);  // one per weight plane
    CHECK(res.saturated == 0);
  }

  const QuantVector sgn = QuantVector::random(rng, 16, 3, true);
  const QuantVector w = QuantVector::random(rng, 16, 5, true);
  CHECK_THROWS_AS(acim_mac(sgn, w, inst), ConfigError);
  const QuantVector wide = QuantVector::random(rng, 16, 5, false);
  CHECK_THROWS_AS(acim_mac(wide, w, inst), ConfigError);
}

TEST_CASE("noiseless one-shot mac is bit-exact") {
  AnalogConfig cfg = base_config(16, lossless_adc_resolution(16));
  cfg.mode = AnalogMode::OneShotMultiBit;
  const MacroInstance inst(cfg);
  Rng rng(0x53);
  for (int rep = 0; rep < 300; rep++) {
    const QuantVector in = QuantVector::random(rng, 16, 1, false);
    const QuantVector w = QuantVector::random(rng, 16, 3, false);
    const MacResult res = acim_mac(in, w, inst, rep);
    CHECK(res.value == dot_oracle(in, w));
    CHECK(res.conversions == 1);
    CHECK(res.adc_energy == 8u);  // R + p resolved bits
  }

  const QuantVector two_bit = QuantVector::random(rng, 16, 2, false);
  const QuantVector w = QuantVector::random(rng, 16, 3, false);
  CHECK_THROWS_AS(acim_mac(two_bit, w, inst), ConfigError);
  const QuantVector in = QuantVector::random(rng, 16, 1, false);
  const QuantVector sgn_w = QuantVector::random(rng, 16, 3, true);
  CHECK_THROWS_AS(acim_mac(in, sgn_w, inst), ConfigError);

  // Plane gain spread perturbs the one-shot result.
  AnalogConfig skewed = cfg;
  skewed.cap_weight_sigma = 0.2;
  skewed.seed = 5;
  const MacroInstance skewed_inst(skewed);
  bool differs = false;
  for (int rep = 0; rep < 50 && !differs; rep++) {
    const QuantVector a = QuantVector::random(rng, 16, 1, false);
    const QuantVector b = QuantVector::random(rng, 16, 3, false);
    differs = acim_mac(a, b, skewed_inst, rep).value != dot_oracle(a, b);
  }
  CHECK(differs);
}

TEST_CASE("ideal readout bypasses the quantizer") {
  AnalogConfig cfg = base_config(64, 1);  // far too coarse for a real ADC
  cfg.readout = Readout::Ideal;
  const MacroInstance ideal(cfg);
  const MacroInstance coarse(base_config(64, 1));
  const QuantVector in = ones_vector(64, 32);
  const QuantVector w = ones_vector(64, 64);
  CHECK(acim_mac(in, w, ideal).value == 32);
  CHECK(acim_mac(in, w, coarse).value != 32);  // 1-bit code can't carry 32
}

TEST_CASE("conversion noise is keyed by trial and plane pair") {
  AnalogConfig cfg = base_config(16, 8);
  cfg.noise_sigma_lsb = 4.0;
  cfg.seed = 7;
  const MacroInstance inst(cfg);
  const QuantVector in = ones_vector(16, 8);
  const QuantVector w = ones_vector(16, 16);
  const BitPlane in_plane = in.bit_plane(0);
  const BitPlane w_plane = w.bit_plane(0);

  const Conversion c1 = acim_bitserial_partial(in_plane, w_plane, inst, 3, 1, 2);
  const Conversion c2 = acim_bitserial_partial(in_plane, w_plane, inst, 3, 1, 2);
  CHECK(c1.analog == c2.analog);
  CHECK(c1.code == c2.code);
  const Conversion other_trial =
      acim_bitserial_partial(in_plane, w_plane, inst, 4, 1, 2);
  CHECK(other_trial.analog != c1.analog);
  const Conversion other_pair =
      acim_bitserial_partial(in_plane, w_plane, inst, 3, 2, 1);
  CHECK(other_pair.analog != c1.analog);

  // Same config, fresh instance: identical stream.
  const MacroInstance again(cfg);
  CHECK(acim_bitserial_partial(in_plane, w_plane, again, 3, 1, 2).analog ==
        c1.analog);

  // Across many trials the mac output actually varies.
  std::set<i64> seen;
  for (u64 t = 0; t < 50; t++) seen.insert(acim_mac(in, w, inst, t).value);
  CHECK(seen.size() > 1);
}

TEST_CASE("heavy noise trips the saturation counter") {
  AnalogConfig cfg = base_config(4, 2);
  cfg.noise_sigma_lsb = 30.0;
  cfg.seed = 11;
  const MacroInstance inst(cfg);
  const QuantVector in = ones_vector(4, 4);
  const QuantVector w = ones_vector(4, 4);
  u64 saturated = 0;
  for (u64 t = 0; t < 20; t++) saturated += acim_mac(in, w, inst, t).saturated;
  CHECK(saturated > 0);
}

TEST_CASE("sparsity adc skips empty planes and keeps codes intact") {
  AnalogConfig cfg = base_config(256, 8);
  cfg.sparsity_adc = true;
  const MacroInstance sparse(cfg);
  AnalogConfig full_cfg = cfg;
  full_cfg.sparsity_adc = false;
  const MacroInstance full(full_cfg);

  const QuantVector in = ones_vector(256, 60);
  const QuantVector w = ones_vector(256, 256);
  const MacResult res_sparse = acim_mac(in, w, sparse);
  const MacResult res_full = acim_mac(in, w, full);
  CHECK(res_sparse.value == res_full.value);
  CHECK(res_sparse.value == 60);
  CHECK(res_sparse.adc_energy == 6u);   // two known-zero MSBs skipped
  CHECK(res_full.adc_energy == 8u);

  const QuantVector empty = ones_vector(256, 0);
  const MacResult skipped = acim_mac(empty, w, sparse);
  CHECK(skipped.value == 0);
  CHECK(skipped.conversions == 0);
  CHECK(skipped.adc_energy == 0);

  const Conversion conv = acim_bitserial_partial(empty.bit_plane(0),
                                                 w.bit_plane(0), sparse, 0, 0, 0);
  CHECK(conv.skipped);
  CHECK(conv.effective_bits == 0);
  CHECK(conv.code == 0);

  // Reduced-range conversions agree with the full converter across random
  // sparse inputs.
  Rng rng(0x54);
  for (int rep = 0; rep < 200; rep++) {
    std::vector<i64> v(256, 0);
    const std::size_t ones = rng.next_below(70);
    for (std::size_t i = 0; i < ones; i++) v[rng.next_below(256)] = 1;
    const QuantVector x(v, 1, false);
    const QuantVector y = QuantVector::random(rng, 256, 1, false);
    CHECK(acim_mac(x, y, sparse, rep).value ==
          acim_mac(x, y, full, rep).value);
  }
}

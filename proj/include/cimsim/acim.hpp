#pragma once

// Behavioral analog CIM macro: charge-domain MAC with static per-row
// mismatch, per-conversion Gaussian noise, and a mid-tread ADC.
//
// Analog value of one conversion:  y_A = sum_i gain_i * (in_i * w_i) + gamma
// where gain_i ~ Normal(1, mismatch_sigma) is frozen per MacroInstance and
// gamma ~ Normal(0, sigma_abs) is fresh per conversion, keyed by
// (instance seed, trial, plane pair) so trials are independent and
// reproducible at any parallelism.
//
// Units: noise_sigma_lsb is given in LSBs of the 1b x 1b bit-serial ADC,
// whose full scale is `rows`; sigma_abs = noise_sigma_lsb * rows / (2^R - 1)
// in all modes.
//
// Modes:
//   BitSerial       - one conversion per (input plane, weight plane) pair,
//                     full scale rows, resolution R
//   BitParallel     - inputs applied as multi-bit DAC levels, one conversion
//                     per weight plane, full scale rows*(2^B-1), resolution R+B
//   OneShotMultiBit - 1-bit inputs, weight planes combined capacitively with
//                     per-plane gain error, a single conversion with full
//                     scale rows*(2^p-1), resolution R+p
//
// With all sigmas zero and R >= ceil(log2(rows+1)) every mode reproduces the
// exact digital MAC bit for bit: each partial lands within half an LSB < 0.5
// of its integer value, so rounding the dequantized code recovers it.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cimsim/core.hpp"

namespace cimsim {

enum class AnalogMode { BitSerial, BitParallel, OneShotMultiBit };
enum class Readout { Quantized, Ideal };

AnalogMode analog_mode_from_string(const std::string& name);
std::string to_string(AnalogMode mode);

Readout readout_from_string(const std::string& name);
std::string to_string(Readout readout);

struct AnalogConfig {
  std::size_t rows = 0;        // dot-product length n
  int adc_resolution = 8;      // R, bits of the 1b x 1b bit-serial ADC
  double noise_sigma_lsb = 0;  // sigma_gamma in bit-serial LSBs
  double mismatch_sigma = 0;   // per-row gain spread
  double cap_weight_sigma = 0; // per-plane gain spread (one-shot mode)
  int dac_bits = 1;            // B, input DAC resolution (bit-parallel mode)
  AnalogMode mode = AnalogMode::BitSerial;
  Readout readout = Readout::Quantized;  // Ideal = no quantization, no clip
  bool sparsity_adc = false;   // resolve only the bits sparsity can't zero
  u64 seed = 0;

  void validate() const;
  double sigma_abs() const;    // absolute noise std dev
};

// Mid-tread quantizer: code = round(value * (2^R - 1) / full_scale) clamped
// to [0, 2^R - 1]; ties round to even. `saturated` reports clamping.
struct AdcReading {
  i64 code = 0;
  double dequantized = 0;
  bool saturated = false;
};

AdcReading adc_quantize(double value, int resolution_bits, double full_scale);

// ADC resolution that makes a noiseless conversion exact: ceil(log2(rows+1)).
int lossless_adc_resolution(std::size_t rows);

// MSBs guaranteed zero for a conversion whose operand has `ones` set bits:
// z = R - bits(round(ones * (2^R - 1) / full_scale)). Lossless by
// construction for noiseless values <= ones.
int sparsity_known_zero_bits(i64 ones, int adc_resolution, double full_scale);

// Energy proxy for a SAR ADC: one comparison per resolved bit.
u64 adc_energy_proxy(std::span<const int> bits_per_conversion);

// One analog conversion, fully described.
struct Conversion {
  double analog = 0;        // pre-ADC value, noise included
  i64 code = 0;             // ADC output (rounded analog under Readout::Ideal)
  double estimate = 0;      // post-readout value fed to recombination
  i64 partial_estimate = 0; // estimate rounded to the nearest integer
  bool saturated = false;
  bool skipped = false;     // sparsity ADC saw an all-zero operand
  int effective_bits = 0;   // bits the converter actually resolved
};

struct MacResult {
  i64 value = 0;
  PartialGrid partials;     // post-ADC codes (layout depends on mode)
  u64 conversions = 0;
  u64 saturated = 0;        // conversions that clipped
  u64 adc_energy = 0;       // sum of effective bits over all conversions
};

class MacroInstance {
 public:
  explicit MacroInstance(AnalogConfig config);

  const AnalogConfig& config() const { return config_; }
  double cell_gain(std::size_t row) const;
  double plane_gain(int plane) const;

 private:
  AnalogConfig config_;
  std::vector<double> cell_gains_;
  std::vector<double> plane_gains_;
};

// One bit-serial conversion for plane pair (j, k) of trial `trial`.
Conversion acim_bitserial_partial(const BitPlane& in_plane,
                                  const BitPlane& w_plane,
                                  const MacroInstance& inst, u64 trial, int j,
                                  int k);

// Full analog MAC in the instance's configured mode.
MacResult acim_mac(const QuantVector& in, const QuantVector& w,
                   const MacroInstance& inst, u64 trial = 0);

}  // namespace cimsim

#pragma once

// Compute-SNR measurement: single-shot and mean-power CSNR, a Monte-Carlo
// harness that runs any MAC backend against the digital oracle, and the
// closed-form prediction for purely Gaussian conversion noise.
//
// A backend that reproduces the oracle exactly has no noise power; that case
// is reported as +infinity dB (serialized as "inf" downstream).

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "cimsim/acim.hpp"
#include "cimsim/core.hpp"
#include "cimsim/hybrid.hpp"

namespace cimsim {

constexpr double kInfiniteCsnrDb = std::numeric_limits<double>::infinity();

// 20*log10(|dmac| / |dmac - amac|); +inf when the two agree.
double csnr_single(i64 dmac, i64 amac);

// Mean-power form over (dmac, amac) pairs:
// 10*log10(sum dmac^2 / sum (dmac-amac)^2).
double csnr_mean(std::span<const std::pair<i64, i64>> pairs);

struct CsnrReport {
  std::size_t trials = 0;
  double mean_signal_power = 0;
  double mean_noise_power = 0;
  double csnr_db = 0;
  double saturation_rate = 0;  // clipped conversions / total conversions
  u64 seed = 0;
};

// Distribution the harness draws (in, w) pairs from: elementwise uniform
// over the full representable range.
struct InputSpec {
  std::size_t n = 0;
  int in_bits = 1;
  int w_bits = 1;
  bool in_signed = false;
  bool w_signed = false;

  void validate() const;
};

struct MacSample {
  i64 value = 0;
  u64 conversions = 0;
  u64 saturated = 0;
  u64 energy = 0;
};

class MacBackend {
 public:
  virtual ~MacBackend() = default;
  // `trial` keys every stochastic draw; calls with the same arguments must
  // return the same sample regardless of call order or thread.
  virtual MacSample mac(const QuantVector& in, const QuantVector& w,
                        u64 trial) const = 0;
};

class DigitalMacBackend : public MacBackend {
 public:
  MacSample mac(const QuantVector& in, const QuantVector& w,
                u64 trial) const override;
};

class AnalogMacBackend : public MacBackend {
 public:
  explicit AnalogMacBackend(AnalogConfig config) : inst_(std::move(config)) {}
  explicit AnalogMacBackend(MacroInstance inst) : inst_(std::move(inst)) {}
  const MacroInstance& instance() const { return inst_; }
  MacSample mac(const QuantVector& in, const QuantVector& w,
                u64 trial) const override;

 private:
  MacroInstance inst_;
};

class HybridMacBackend : public MacBackend {
 public:
  HybridMacBackend(MacroInstance inst, DomainAssignment assignment)
      : inst_(std::move(inst)), assignment_(std::move(assignment)) {}
  MacSample mac(const QuantVector& in, const QuantVector& w,
                u64 trial) const override;

 private:
  MacroInstance inst_;
  DomainAssignment assignment_;
};

// T trials of (draw inputs, run backend, compare to dot_oracle). Inputs for
// trial t depend only on (seed, t), so the loop can be split freely without
// changing the report.
CsnrReport run_csnr_harness(const MacBackend& backend, const InputSpec& spec,
                            std::size_t trials, u64 seed);

// Closed-form CSNR for Gaussian conversion noise only:
// 10*log10(E[DMAC^2] / (sigma_abs^2 * sum of squared recombination weights)),
// with E[DMAC^2] estimated from `samples` oracle draws. Valid only when
// noise_sigma_lsb > 0 and both gain spreads are zero; quantization is
// neglected (the Readout::Ideal limit).
double predicted_csnr_gaussian(const InputSpec& spec, const AnalogConfig& config,
                               std::size_t samples = 20000, u64 seed = 0x5eed);

}  // namespace cimsim

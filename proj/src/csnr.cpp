#include "cimsim/csnr.hpp"

#include <cmath>
#include <cstdlib>

#include "cimsim/dcim.hpp"

namespace cimsim {

double csnr_single(i64 dmac, i64 amac) {
  if (dmac == 0) {
    throw RangeError("csnr_single: reference MAC is zero, CSNR undefined");
  }
  if (dmac == amac) return kInfiniteCsnrDb;
  return 20.0 * std::log10(static_cast<double>(std::llabs(dmac)) /
                           static_cast<double>(std::llabs(dmac - amac)));
}

double csnr_mean(std::span<const std::pair<i64, i64>> pairs) {
  if (pairs.empty()) throw ShapeError("csnr_mean: no pairs");
  double signal = 0, noise = 0;
  for (const auto& [dmac, amac] : pairs) {
    const double d = static_cast<double>(dmac);
    const double e = static_cast<double>(dmac - amac);
    signal += d * d;
    noise += e * e;
  }
  if (signal == 0) {
    throw RangeError("csnr_mean: zero signal power, CSNR undefined");
  }
  if (noise == 0) return kInfiniteCsnrDb;
  return 10.0 * std::log10(signal / noise);
}

void InputSpec::validate() const {
  if (n < 1) throw ConfigError("InputSpec: n must be >= 1");
  if (in_bits < 1 || in_bits > kMaxBitWidth || w_bits < 1 ||
      w_bits > kMaxBitWidth) {
    throw ConfigError("InputSpec: bit widths must be in [1, " +
                      std::to_string(kMaxBitWidth) + "]");
  }
}

MacSample DigitalMacBackend::mac(const QuantVector& in, const QuantVector& w,
                                 u64) const {
  return MacSample{dcim_mac(in, w), 0, 0, 0};
}

MacSample AnalogMacBackend::mac(const QuantVector& in, const QuantVector& w,
                                u64 trial) const {
  const MacResult r = acim_mac(in, w, inst_, trial);
  return MacSample{r.value, r.conversions, r.saturated, r.adc_energy};
}

MacSample HybridMacBackend::mac(const QuantVector& in, const QuantVector& w,
                                u64 trial) const {
  const MacResult r = hybrid_mac(in, w, assignment_, inst_, trial);
  return MacSample{r.value, r.conversions, r.saturated, r.adc_energy};
}

CsnrReport run_csnr_harness(const MacBackend& backend, const InputSpec& spec,
                            std::size_t trials, u64 seed) {
  spec.validate();
  if (trials < 1) throw RangeError("run_csnr_harness: trials must be >= 1");
  double signal = 0, noise = 0;
  u64 conversions = 0, saturated = 0;
  for (std::size_t trial = 0; trial < trials; trial++) {
    Rng rng(seed, StreamTag::kTrialInput, trial);
    const QuantVector in =
        QuantVector::random(rng, spec.n, spec.in_bits, spec.in_signed);
    const QuantVector w =
        QuantVector::random(rng, spec.n, spec.w_bits, spec.w_signed);
    const i64 dmac = dot_oracle(in, w);
    const MacSample sample = backend.mac(in, w, trial);
    const double d = static_cast<double>(dmac);
    const double e = static_cast<double>(dmac - sample.value);
    signal += d * d;
    noise += e * e;
    conversions += sample.conversions;
    saturated += sample.saturated;
  }
  CsnrReport report;
  report.trials = trials;
  report.seed = seed;
  report.mean_signal_power = signal / static_cast<double>(trials);
  report.mean_noise_power = noise / static_cast<double>(trials);
  if (signal == 0) {
    throw RangeError("run_csnr_harness: zero signal power, CSNR undefined");
  }
  report.csnr_db =
      noise == 0 ? kInfiniteCsnrDb : 10.0 * std::log10(signal / noise);
  report.saturation_rate =
      conversions == 0
          ? 0.0
          : static_cast<double>(saturated) / static_cast<double>(conversions);
  return report;
}

double predicted_csnr_gaussian(const InputSpec& spec, const AnalogConfig& config,
                               std::size_t samples, u64 seed) {
  spec.validate();
  config.validate();
  if (!(config.noise_sigma_lsb > 0)) {
    throw NotApplicableError(
        "predicted_csnr_gaussian needs noise_sigma_lsb > 0");
  }
  if (config.mismatch_sigma != 0 || config.cap_weight_sigma != 0) {
    throw NotApplicableError(
        "predicted_csnr_gaussian models conversion noise only; gain spreads "
        "must be zero");
  }
  if (spec.n != config.rows) {
    throw ConfigError("InputSpec length does not match configured rows");
  }
  if (samples < 1000) {
    throw RangeError("predicted_csnr_gaussian: need >= 1000 signal samples");
  }

  double weight_sq = 0;
  auto sq_sum = [](int bits, bool is_signed) {
    double s = 0;
    for (int j = 0; j < bits; j++) {
      const double wj = static_cast<double>(plane_weight(j, bits, is_signed));
      s += wj * wj;
    }
    return s;
  };
  switch (config.mode) {
    case AnalogMode::BitSerial:
      weight_sq = sq_sum(spec.in_bits, spec.in_signed) *
                  sq_sum(spec.w_bits, spec.w_signed);
      break;
    case AnalogMode::BitParallel:
      weight_sq = sq_sum(spec.w_bits, spec.w_signed);
      break;
    case AnalogMode::OneShotMultiBit:
      weight_sq = 1.0;
      break;
  }

  double signal = 0;
  for (std::size_t t = 0; t < samples; t++) {
    Rng rng(seed, StreamTag::kPredictSignal, t);
    const QuantVector in =
        QuantVector::random(rng, spec.n, spec.in_bits, spec.in_signed);
    const QuantVector w =
        QuantVector::random(rng, spec.n, spec.w_bits, spec.w_signed);
    const double d = static_cast<double>(dot_oracle(in, w));
    signal += d * d;
  }
  signal /= static_cast<double>(samples);
  if (signal == 0) {
    throw RangeError("predicted_csnr_gaussian: zero signal power");
  }
  const double sigma = config.sigma_abs();
  return 10.0 * std::log10(signal / (sigma * sigma * weight_sq));
}

}  // namespace cimsim

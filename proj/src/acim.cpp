#include "cimsim/acim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace cimsim {

namespace {

constexpr int kMaxPlaneGains = 32;

double gaussian_draw(u64 seed, StreamTag tag, u64 a, u64 b = 0, u64 c = 0) {
  Rng rng(seed, tag, a, b, c);
  return rng.next_gaussian();
}

void check_plane_shape(const BitPlane& in_plane, const BitPlane& w_plane,
                       const AnalogConfig& cfg) {
  if (in_plane.bits.size() != cfg.rows || w_plane.bits.size() != cfg.rows) {
    throw ShapeError("plane length does not match configured rows (" +
                     std::to_string(cfg.rows) + ")");
  }
}

double quantizer_steps(int resolution_bits) {
  return static_cast<double>((i64{1} << resolution_bits) - 1);
}

}  // namespace

AnalogMode analog_mode_from_string(const std::string& name) {
  if (name == "bit-serial") return AnalogMode::BitSerial;
  if (name == "bit-parallel") return AnalogMode::BitParallel;
  if (name == "one-shot") return AnalogMode::OneShotMultiBit;
  throw ConfigError("unknown analog mode '" + name +
                    "' (want bit-serial|bit-parallel|one-shot)");
}

std::string to_string(AnalogMode mode) {
  switch (mode) {
    case AnalogMode::BitSerial:
      return "bit-serial";
    case AnalogMode::BitParallel:
      return "bit-parallel";
    case AnalogMode::OneShotMultiBit:
      return "one-shot";
  }
  return "bit-serial";
}

Readout readout_from_string(const std::string& name) {
  if (name == "quantized") return Readout::Quantized;
  if (name == "ideal") return Readout::Ideal;
  throw ConfigError("unknown readout '" + name + "' (want quantized|ideal)");
}

std::string to_string(Readout readout) {
  return readout == Readout::Ideal ? "ideal" : "quantized";
}

void AnalogConfig::validate() const {
  if (rows < 1 || rows > (std::size_t{1} << 20)) {
    throw ConfigError("rows must be in [1, 2^20]");
  }
  if (adc_resolution < 1 || adc_resolution > kMaxBitWidth) {
    throw ConfigError("adc_resolution must be in [1, " +
                      std::to_string(kMaxBitWidth) + "]");
  }
  if (noise_sigma_lsb < 0 || !std::isfinite(noise_sigma_lsb)) {
    throw ConfigError("noise_sigma_lsb must be finite and >= 0");
  }
  if (mismatch_sigma < 0 || !std::isfinite(mismatch_sigma)) {
    throw ConfigError("mismatch_sigma must be finite and >= 0");
  }
  if (cap_weight_sigma < 0 || !std::isfinite(cap_weight_sigma)) {
    throw ConfigError("cap_weight_sigma must be finite and >= 0");
  }
  if (dac_bits < 1 || dac_bits > 16) {
    throw ConfigError("dac_bits must be in [1, 16]");
  }
}

double AnalogConfig::sigma_abs() const {
  return noise_sigma_lsb * static_cast<double>(rows) /
         quantizer_steps(adc_resolution);
}

AdcReading adc_quantize(double value, int resolution_bits, double full_scale) {
  if (resolution_bits < 1 || resolution_bits > 48) {
    throw RangeError("adc_quantize resolution must be in [1, 48]");
  }
  if (!(full_scale > 0) || !std::isfinite(full_scale)) {
    throw RangeError("adc_quantize full_scale must be finite and positive");
  }
  if (!std::isfinite(value)) {
    throw RangeError("adc_quantize value must be finite");
  }
  const double steps = quantizer_steps(resolution_bits);
  const double raw = std::nearbyint(value * steps / full_scale);
  AdcReading reading;
  const double clamped = std::clamp(raw, 0.0, steps);
  reading.code = static_cast<i64>(clamped);
  reading.saturated = raw != clamped;
  reading.dequantized = clamped * full_scale / steps;
  return reading;
}

int lossless_adc_resolution(std::size_t rows) {
  if (rows < 1) throw RangeError("rows must be >= 1");
  return std::bit_width(rows);  // ceil(log2(rows + 1))
}

int sparsity_known_zero_bits(i64 ones, int adc_resolution, double full_scale) {
  if (adc_resolution < 1 || adc_resolution > 48) {
    throw RangeError("adc_resolution must be in [1, 48]");
  }
  if (!(full_scale > 0) || !std::isfinite(full_scale)) {
    throw RangeError("full_scale must be finite and positive");
  }
  if (ones < 0 || static_cast<double>(ones) > full_scale) {
    throw RangeError("ones count must be in [0, full_scale]");
  }
  const double steps = quantizer_steps(adc_resolution);
  const i64 max_code =
      static_cast<i64>(std::nearbyint(static_cast<double>(ones) * steps / full_scale));
  const int needed = std::bit_width(static_cast<u64>(max_code));
  return adc_resolution - needed;
}

u64 adc_energy_proxy(std::span<const int> bits_per_conversion) {
  u64 total = 0;
  for (int bits : bits_per_conversion) {
    if (bits < 0) throw RangeError("negative bit count");
    total += static_cast<u64>(bits);
  }
  return total;
}

MacroInstance::MacroInstance(AnalogConfig config) : config_(config) {
  config_.validate();
  cell_gains_.resize(config_.rows, 1.0);
  if (config_.mismatch_sigma > 0) {
    for (std::size_t i = 0; i < config_.rows; i++) {
      cell_gains_[i] = 1.0 + config_.mismatch_sigma *
                                 gaussian_draw(config_.seed,
                                               StreamTag::kCellGain, i);
    }
  }
  plane_gains_.resize(kMaxPlaneGains, 1.0);
  if (config_.cap_weight_sigma > 0) {
    for (int k = 0; k < kMaxPlaneGains; k++) {
      plane_gains_[k] = 1.0 + config_.cap_weight_sigma *
                                  gaussian_draw(config_.seed,
                                                StreamTag::kPlaneGain,
                                                static_cast<u64>(k));
    }
  }
}

double MacroInstance::cell_gain(std::size_t row) const {
  if (row >= cell_gains_.size()) throw RangeError("row index out of range");
  return cell_gains_[row];
}

double MacroInstance::plane_gain(int plane) const {
  if (plane < 0 || plane >= kMaxPlaneGains) {
    throw RangeError("plane index out of range");
  }
  return plane_gains_[plane];
}

Conversion acim_bitserial_partial(const BitPlane& in_plane,
                                  const BitPlane& w_plane,
                                  const MacroInstance& inst, u64 trial, int j,
                                  int k) {
  const AnalogConfig& cfg = inst.config();
  check_plane_shape(in_plane, w_plane, cfg);

  Conversion conv;
  conv.effective_bits = cfg.adc_resolution;

  int zero_bits = 0;
  if (cfg.sparsity_adc) {
    const i64 ones = in_plane.popcount();
    if (ones == 0) {  // nothing to convert; the ADC never fires
      conv.skipped = true;
      conv.effective_bits = 0;
      return conv;
    }
    zero_bits = sparsity_known_zero_bits(ones, cfg.adc_resolution,
                                         static_cast<double>(cfg.rows));
    conv.effective_bits = cfg.adc_resolution - zero_bits;
  }

  double analog = 0;
  for (std::size_t i = 0; i < cfg.rows; i++) {
    if (in_plane.bits[i] & w_plane.bits[i]) analog += inst.cell_gain(i);
  }
  const double sigma = cfg.sigma_abs();
  if (sigma > 0) {
    analog += sigma * gaussian_draw(cfg.seed, StreamTag::kConversionNoise,
                                    trial, static_cast<u64>(j),
                                    static_cast<u64>(k));
  }
  conv.analog = analog;

  if (cfg.readout == Readout::Ideal) {
    conv.estimate = analog;
    conv.partial_estimate = static_cast<i64>(std::nearbyint(analog));
    conv.code = conv.partial_estimate;
    return conv;
  }

  AdcReading reading = adc_quantize(analog, cfg.adc_resolution,
                                    static_cast<double>(cfg.rows));
  if (zero_bits > 0) {
    const i64 bound = (i64{1} << (cfg.adc_resolution - zero_bits)) - 1;
    if (reading.code > bound) {  // noise pushed past the sparse range
      reading.code = bound;
      reading.saturated = true;
      reading.dequantized = static_cast<double>(bound) *
                            static_cast<double>(cfg.rows) /
                            quantizer_steps(cfg.adc_resolution);
    }
  }
  conv.code = reading.code;
  conv.estimate = reading.dequantized;
  conv.partial_estimate = static_cast<i64>(std::nearbyint(reading.dequantized));
  conv.saturated = reading.saturated;
  return conv;
}

namespace {

MacResult acim_mac_bitserial(const QuantVector& in, const QuantVector& w,
                             const MacroInstance& inst, u64 trial) {
  const AnalogConfig& cfg = inst.config();
  const int m = in.bit_width();
  const int p = w.bit_width();
  MacResult result{0, PartialGrid(m, p)};
  PartialGrid estimates(m, p);
  const auto in_weights = in.plane_weights();
  const auto w_weights = w.plane_weights();
  double ideal_sum = 0;
  for (int j = 0; j < m; j++) {
    const BitPlane in_plane = in.bit_plane(j);
    for (int k = 0; k < p; k++) {
      const BitPlane w_plane = w.bit_plane(k);
      const Conversion conv =
          acim_bitserial_partial(in_plane, w_plane, inst, trial, j, k);
      result.partials.set(j, k, conv.code);
      estimates.set(j, k, conv.partial_estimate);
      if (!conv.skipped) {
        result.conversions++;
        result.adc_energy += static_cast<u64>(conv.effective_bits);
      }
      if (conv.saturated) result.saturated++;
      ideal_sum += conv.estimate * static_cast<double>(in_weights[j]) *
                   static_cast<double>(w_weights[k]);
    }
  }
  if (cfg.readout == Readout::Ideal) {
    result.value = static_cast<i64>(std::nearbyint(ideal_sum));
  } else {
    result.value = recombine(estimates, in_weights, w_weights);
  }
  return result;
}

MacResult acim_mac_bitparallel(const QuantVector& in, const QuantVector& w,
                               const MacroInstance& inst, u64 trial) {
  const AnalogConfig& cfg = inst.config();
  if (in.is_signed()) {
    throw ConfigError("bit-parallel mode drives an unsigned input DAC");
  }
  if (in.bit_width() > cfg.dac_bits) {
    throw ConfigError("input bit width " + std::to_string(in.bit_width()) +
                      " exceeds dac_bits " + std::to_string(cfg.dac_bits));
  }
  const int p = w.bit_width();
  const int resolution = cfg.adc_resolution + cfg.dac_bits;
  const double full_scale =
      static_cast<double>(cfg.rows) *
      static_cast<double>((i64{1} << cfg.dac_bits) - 1);
  MacResult result{0, PartialGrid(1, p)};
  PartialGrid estimates(1, p);
  const auto w_weights = w.plane_weights();
  const double sigma = cfg.sigma_abs();
  double ideal_sum = 0;
  for (int k = 0; k < p; k++) {
    const BitPlane w_plane = w.bit_plane(k);
    double analog = 0;
    for (std::size_t i = 0; i < cfg.rows; i++) {
      if (w_plane.bits[i]) {
        analog += inst.cell_gain(i) * static_cast<double>(in.values()[i]);
      }
    }
    if (sigma > 0) {
      analog += sigma * gaussian_draw(cfg.seed, StreamTag::kConversionNoise,
                                      trial, 0, static_cast<u64>(k));
    }
    double estimate;
    if (cfg.readout == Readout::Ideal) {
      estimate = analog;
      const i64 rounded = static_cast<i64>(std::nearbyint(analog));
      result.partials.set(0, k, rounded);
      estimates.set(0, k, rounded);
    } else {
      const AdcReading reading = adc_quantize(analog, resolution, full_scale);
      estimate = reading.dequantized;
      result.partials.set(0, k, reading.code);
      estimates.set(0, k, static_cast<i64>(std::nearbyint(reading.dequantized)));
      if (reading.saturated) result.saturated++;
    }
    result.conversions++;
    result.adc_energy += static_cast<u64>(resolution);
    ideal_sum += estimate * static_cast<double>(w_weights[k]);
  }
  if (cfg.readout == Readout::Ideal) {
    result.value = static_cast<i64>(std::nearbyint(ideal_sum));
  } else {
    const i64 one = 1;
    result.value = recombine(estimates, std::span<const i64>(&one, 1),
                             w_weights);
  }
  return result;
}

MacResult acim_mac_oneshot(const QuantVector& in, const QuantVector& w,
                           const MacroInstance& inst, u64 trial) {
  const AnalogConfig& cfg = inst.config();
  if (in.bit_width() != 1 || in.is_signed()) {
    throw ConfigError("one-shot mode takes 1-bit unsigned inputs");
  }
  if (w.is_signed()) {
    throw ConfigError("one-shot capacitive combining is unsigned");
  }
  const int p = w.bit_width();
  const int resolution = cfg.adc_resolution + p;
  const double full_scale = static_cast<double>(cfg.rows) *
                            static_cast<double>((i64{1} << p) - 1);
  double analog = 0;
  for (int k = 0; k < p; k++) {
    const BitPlane w_plane = w.bit_plane(k);
    double partial = 0;
    for (std::size_t i = 0; i < cfg.rows; i++) {
      if (in.values()[i] && w_plane.bits[i]) partial += inst.cell_gain(i);
    }
    analog += inst.plane_gain(k) * static_cast<double>(i64{1} << k) * partial;
  }
  const double sigma = cfg.sigma_abs();
  if (sigma > 0) {
    analog += sigma * gaussian_draw(cfg.seed, StreamTag::kConversionNoise,
                                    trial, 0, 0);
  }
  MacResult result{0, PartialGrid(1, 1)};
  result.conversions = 1;
  result.adc_energy = static_cast<u64>(resolution);
  if (cfg.readout == Readout::Ideal) {
    result.value = static_cast<i64>(std::nearbyint(analog));
    result.partials.set(0, 0, result.value);
  } else {
    const AdcReading reading = adc_quantize(analog, resolution, full_scale);
    result.partials.set(0, 0, reading.code);
    if (reading.saturated) result.saturated++;
    result.value = static_cast<i64>(std::nearbyint(reading.dequantized));
  }
  return result;
}

}  // namespace

MacResult acim_mac(const QuantVector& in, const QuantVector& w,
                   const MacroInstance& inst, u64 trial) {
  const AnalogConfig& cfg = inst.config();
  if (in.size() != w.size() || in.size() != cfg.rows) {
    throw ShapeError("acim_mac: vector lengths must equal configured rows");
  }
  switch (cfg.mode) {
    case AnalogMode::BitSerial:
      return acim_mac_bitserial(in, w, inst, trial);
    case AnalogMode::BitParallel:
      return acim_mac_bitparallel(in, w, inst, trial);
    case AnalogMode::OneShotMultiBit:
      return acim_mac_oneshot(in, w, inst, trial);
  }
  throw ConfigError("unknown analog mode");
}

}  // namespace cimsim

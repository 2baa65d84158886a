#pragma once

// Small quantized-MLP harness for end-to-end accuracy studies: every matrix
// row-by-column product runs through a MacBackend, so swapping the digital
// backend for a noisy analog one shows how compute noise reaches task
// accuracy.
//
// Conventions: activations are unsigned `input_bits`-wide everywhere (the
// dataset features and every hidden layer output). A layer's raw accumulator
// is shifted right by scale_shift (round half to even), passed through its
// activation, and saturated back into the activation range; the last layer
// skips the saturation and returns raw logits. Per-MAC noise is keyed by
// (seed, sample, layer, column), so no sample, layer, or column perturbs
// another.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cimsim/csnr.hpp"

namespace cimsim {

enum class Activation { None, Relu };

struct QuantLayer {
  std::size_t rows = 0;  // input dimension
  std::size_t cols = 0;  // output dimension
  int bits = 0;          // weight bit width
  bool is_signed = true;
  int scale_shift = 0;   // output scale: divide by 2^scale_shift
  Activation activation = Activation::None;
  std::vector<i64> weights;  // row-major, rows * cols

  QuantVector column(std::size_t c) const;
};

struct QuantModel {
  int schema_version = 1;
  int input_bits = 0;
  std::vector<QuantLayer> layers;

  void validate() const;
};

struct Dataset {
  std::vector<std::vector<i64>> features;
  std::vector<int> labels;
  int classes = 0;
};

QuantModel load_model(const std::string& path);
Dataset load_dataset(const std::string& path, int feature_bits);

// Half-to-even arithmetic shift: round(value / 2^shift).
i64 round_shift_half_even(i64 value, int shift);

// Layers differ in fan-in, so inference picks a backend per layer instead of
// holding one fixed-size macro. Selectors cache per-shape backends; repeated
// calls with the same shape return the same instance (single-threaded lazy
// init).
class BackendSelector {
 public:
  virtual ~BackendSelector() = default;
  virtual const MacBackend& layer_backend(const QuantLayer& layer,
                                          int input_bits) const = 0;
};

class DigitalBackendSelector : public BackendSelector {
 public:
  const MacBackend& layer_backend(const QuantLayer&, int) const override {
    return backend_;
  }

 private:
  DigitalMacBackend backend_;
};

// `base.rows` is overridden by each layer's fan-in; everything else (ADC
// resolution, sigmas, mode, seed) applies to every layer's macro.
class AnalogBackendSelector : public BackendSelector {
 public:
  explicit AnalogBackendSelector(AnalogConfig base);
  const MacBackend& layer_backend(const QuantLayer& layer,
                                  int input_bits) const override;

 private:
  AnalogConfig base_;
  mutable std::map<std::size_t, std::unique_ptr<AnalogMacBackend>> cache_;
};

// Bit-serial hybrid with a straight digital/analog split at `boundary`
// (plane pairs with j+k >= boundary go digital) applied to every layer.
class HybridBackendSelector : public BackendSelector {
 public:
  HybridBackendSelector(AnalogConfig base, int boundary);
  const MacBackend& layer_backend(const QuantLayer& layer,
                                  int input_bits) const override;

 private:
  using Key = std::array<std::size_t, 3>;  // rows, input bits, weight bits
  AnalogConfig base_;
  int boundary_;
  mutable std::map<Key, std::unique_ptr<HybridMacBackend>> cache_;
};

// Logits for one sample. `sample` keys this sample's noise draws apart from
// every other sample's.
std::vector<i64> infer(const QuantModel& model, const std::vector<i64>& features,
                       const BackendSelector& backend, u64 seed, u64 sample);

// argmax of infer(); ties resolve to the lowest class index.
int predict(const QuantModel& model, const std::vector<i64>& features,
            const BackendSelector& backend, u64 seed, u64 sample);

double dataset_accuracy(const QuantModel& model, const Dataset& dataset,
                        const BackendSelector& backend, u64 seed);

struct SweepPoint {
  double sigma_lsb = 0;
  double csnr_db = 0;  // measured on the model's largest layer
  double accuracy = 0;
};

// For each noise level: measure MAC-level CSNR on the model's largest layer
// (most weights; earliest wins ties) and dataset accuracy with the same
// analog config. Points come back sorted by sigma ascending.
std::vector<SweepPoint> accuracy_vs_csnr_sweep(const QuantModel& model,
                                               const Dataset& dataset,
                                               std::vector<double> sigmas,
                                               AnalogConfig base,
                                               std::size_t csnr_trials,
                                               u64 seed);

}  // namespace cimsim

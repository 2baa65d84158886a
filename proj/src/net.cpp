#include "cimsim/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cimsim/errors.hpp"
#include "cimsim/hybrid.hpp"
#include "cimsim/rng.hpp"

namespace cimsim {

namespace {

using nlohmann::json;

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "none") return Activation::None;
  throw SchemaError("unknown activation '" + name + "' (want relu|none)");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

i64 parse_int_field(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  i64 value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw SchemaError(where + ": '" + text + "' is not an integer");
  }
  if (used != text.size()) {
    throw SchemaError(where + ": '" + text + "' is not an integer");
  }
  return value;
}

}  // namespace

QuantVector QuantLayer::column(std::size_t c) const {
  if (c >= cols) throw RangeError("column index out of range");
  std::vector<i64> col(rows);
  for (std::size_t r = 0; r < rows; r++) col[r] = weights[r * cols + c];
  return QuantVector(std::move(col), bits, is_signed);
}

void QuantModel::validate() const {
  if (schema_version != 1) {
    throw SchemaError("unsupported model schema_version (want 1)");
  }
  if (input_bits < 1 || input_bits > kMaxBitWidth) {
    throw SchemaError("input_bits must be in [1, " +
                      std::to_string(kMaxBitWidth) + "]");
  }
  if (layers.empty()) throw SchemaError("model has no layers");
  for (std::size_t li = 0; li < layers.size(); li++) {
    const QuantLayer& layer = layers[li];
    const std::string where = "layer " + std::to_string(li) + ": ";
    if (layer.rows < 1 || layer.cols < 1) {
      throw SchemaError(where + "rows and cols must be >= 1");
    }
    if (layer.bits < 1 || layer.bits > kMaxBitWidth) {
      throw SchemaError(where + "bits must be in [1, " +
                        std::to_string(kMaxBitWidth) + "]");
    }
    if (layer.scale_shift < 0 || layer.scale_shift > 62) {
      throw SchemaError(where + "scale_shift must be in [0, 62]");
    }
    if (layer.weights.size() != layer.rows * layer.cols) {
      throw SchemaError(where + "weights must hold rows*cols entries");
    }
    const i64 lo = layer.is_signed ? -(i64{1} << (layer.bits - 1)) : 0;
    const i64 hi = layer.is_signed ? (i64{1} << (layer.bits - 1)) - 1
                                   : (i64{1} << layer.bits) - 1;
    for (i64 wv : layer.weights) {
      if (wv < lo || wv > hi) {
        throw RangeError(where + "weight " + std::to_string(wv) +
                         " does not fit a " + std::to_string(layer.bits) +
                         "-bit " + (layer.is_signed ? "signed" : "unsigned") +
                         " value");
      }
    }
    if (li + 1 < layers.size()) {
      if (layers[li + 1].rows != layer.cols) {
        throw SchemaError(where + "cols must match the next layer's rows");
      }
      if (layer.activation != Activation::Relu) {
        throw SchemaError(where + "hidden layers must use relu");
      }
    }
  }
}

QuantModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open model file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError("model file '" + path + "' is not valid JSON: " +
                      std::string(e.what()));
  }
  QuantModel model;
  try {
    model.schema_version = doc.at("schema_version").get<int>();
    model.input_bits = doc.at("input_bits").get<int>();
    for (const json& lj : doc.at("layers")) {
      QuantLayer layer;
      layer.rows = lj.at("rows").get<std::size_t>();
      layer.cols = lj.at("cols").get<std::size_t>();
      layer.bits = lj.at("bits").get<int>();
      layer.is_signed = lj.at("signed").get<bool>();
      layer.scale_shift = lj.at("scale_shift").get<int>();
      layer.activation = parse_activation(lj.at("activation").get<std::string>());
      layer.weights = lj.at("weights").get<std::vector<i64>>();
      model.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw SchemaError("model file '" + path + "' schema violation: " +
                      std::string(e.what()));
  }
  model.validate();
  return model;
}

Dataset load_dataset(const std::string& path, int feature_bits) {
  if (feature_bits < 1 || feature_bits > kMaxBitWidth) {
    throw RangeError("feature_bits must be in [1, " +
                     std::to_string(kMaxBitWidth) + "]");
  }
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open dataset file '" + path + "'");

  auto next_line = [&in](std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  std::string line;
  if (!next_line(line) || line != "# schema_version=1") {
    throw SchemaError("dataset must start with '# schema_version=1'");
  }
  if (!next_line(line)) throw SchemaError("dataset has no header row");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label") {
    throw SchemaError("dataset header must be f0,...,f<k-1>,label");
  }
  const std::size_t n_features = header.size() - 1;
  for (std::size_t i = 0; i < n_features; i++) {
    if (header[i] != "f" + std::to_string(i)) {
      throw SchemaError("dataset header must be f0,...,f<k-1>,label");
    }
  }

  Dataset ds;
  const i64 max_feature = (i64{1} << feature_bits) - 1;
  std::size_t row = 0;
  while (next_line(line)) {
    if (line.empty()) continue;
    row++;
    const std::string where = "dataset row " + std::to_string(row);
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw SchemaError(where + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    std::vector<i64> feats(n_features);
    for (std::size_t i = 0; i < n_features; i++) {
      feats[i] = parse_int_field(fields[i], where);
      if (feats[i] < 0 || feats[i] > max_feature) {
        throw RangeError(where + ": feature " + std::to_string(feats[i]) +
                         " does not fit " + std::to_string(feature_bits) +
                         " unsigned bits");
      }
    }
    const i64 label = parse_int_field(fields.back(), where);
    if (label < 0 || label > std::numeric_limits<int>::max()) {
      throw RangeError(where + ": label out of range");
    }
    ds.features.push_back(std::move(feats));
    ds.labels.push_back(static_cast<int>(label));
  }
  if (ds.features.empty()) throw SchemaError("dataset has no samples");
  ds.classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  return ds;
}

i64 round_shift_half_even(i64 value, int shift) {
  if (shift < 0 || shift > 62) throw RangeError("shift must be in [0, 62]");
  if (shift == 0) return value;
  const i64 q = value >> shift;        // floor
  const i64 r = value - (q << shift);  // remainder in [0, 2^shift)
  const i64 half = i64{1} << (shift - 1);
  if (r > half) return q + 1;
  if (r < half) return q;
  return q + (q & 1);  // tie: round to even
}

AnalogBackendSelector::AnalogBackendSelector(AnalogConfig base)
    : base_(base) {
  base_.validate();
}

const MacBackend& AnalogBackendSelector::layer_backend(const QuantLayer& layer,
                                                       int) const {
  auto it = cache_.find(layer.rows);
  if (it == cache_.end()) {
    AnalogConfig cfg = base_;
    cfg.rows = layer.rows;
    it = cache_.emplace(layer.rows, std::make_unique<AnalogMacBackend>(cfg))
             .first;
  }
  return *it->second;
}

HybridBackendSelector::HybridBackendSelector(AnalogConfig base, int boundary)
    : base_(base), boundary_(boundary) {
  base_.validate();
  if (base_.mode != AnalogMode::BitSerial) {
    throw ConfigError("hybrid inference needs bit-serial mode");
  }
}

const MacBackend& HybridBackendSelector::layer_backend(const QuantLayer& layer,
                                                       int input_bits) const {
  const Key key{layer.rows, static_cast<std::size_t>(input_bits),
                static_cast<std::size_t>(layer.bits)};
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    AnalogConfig cfg = base_;
    cfg.rows = layer.rows;
    DomainAssignment split =
        DomainAssignment::straight_split(input_bits, layer.bits, boundary_);
    it = cache_
             .emplace(key, std::make_unique<HybridMacBackend>(
                               MacroInstance(cfg), std::move(split)))
             .first;
  }
  return *it->second;
}

std::vector<i64> infer(const QuantModel& model, const std::vector<i64>& features,
                       const BackendSelector& backend, u64 seed, u64 sample) {
  model.validate();
  if (features.size() != model.layers.front().rows) {
    throw ShapeError("input length " + std::to_string(features.size()) +
                     " does not match first-layer rows " +
                     std::to_string(model.layers.front().rows));
  }
  const i64 act_max = (i64{1} << model.input_bits) - 1;
  for (i64 f : features) {
    if (f < 0 || f > act_max) {
      throw RangeError("feature " + std::to_string(f) + " does not fit " +
                       std::to_string(model.input_bits) + " unsigned bits");
    }
  }

  std::vector<i64> acts = features;
  for (std::size_t li = 0; li < model.layers.size(); li++) {
    const QuantLayer& layer = model.layers[li];
    const MacBackend& mac_backend = backend.layer_backend(layer, model.input_bits);
    const QuantVector in(acts, model.input_bits, false);
    std::vector<i64> out(layer.cols);
    for (std::size_t c = 0; c < layer.cols; c++) {
      const u64 trial = derive_key(seed, StreamTag::kNetTrial, sample,
                                   static_cast<u64>(li), static_cast<u64>(c));
      out[c] = mac_backend.mac(in, layer.column(c), trial).value;
    }
    const bool last = li + 1 == model.layers.size();
    for (i64& v : out) {
      v = round_shift_half_even(v, layer.scale_shift);
      if (layer.activation == Activation::Relu) v = std::max<i64>(v, 0);
      if (!last) v = std::clamp<i64>(v, 0, act_max);
    }
    acts = std::move(out);
  }
  return acts;
}

int predict(const QuantModel& model, const std::vector<i64>& features,
            const BackendSelector& backend, u64 seed, u64 sample) {
  const std::vector<i64> logits = infer(model, features, backend, seed, sample);
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); i++) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<int>(best);
}

double dataset_accuracy(const QuantModel& model, const Dataset& dataset,
                        const BackendSelector& backend, u64 seed) {
  if (dataset.features.empty() ||
      dataset.features.size() != dataset.labels.size()) {
    throw ShapeError("dataset features and labels must be non-empty and match");
  }
  std::size_t hits = 0;
  for (std::size_t s = 0; s < dataset.features.size(); s++) {
    if (predict(model, dataset.features[s], backend, seed, s) ==
        dataset.labels[s]) {
      hits++;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.features.size());
}

std::vector<SweepPoint> accuracy_vs_csnr_sweep(const QuantModel& model,
                                               const Dataset& dataset,
                                               std::vector<double> sigmas,
                                               AnalogConfig base,
                                               std::size_t csnr_trials,
                                               u64 seed) {
  model.validate();
  if (sigmas.empty()) throw ConfigError("sigma ladder must not be empty");
  for (double s : sigmas) {
    if (!(s >= 0) || !std::isfinite(s)) {
      throw ConfigError("sigma values must be finite and >= 0");
    }
  }
  std::sort(sigmas.begin(), sigmas.end());

  std::size_t big = 0;
  for (std::size_t i = 1; i < model.layers.size(); i++) {
    if (model.layers[i].rows * model.layers[i].cols >
        model.layers[big].rows * model.layers[big].cols) {
      big = i;
    }
  }
  const QuantLayer& layer = model.layers[big];
  InputSpec spec;
  spec.n = layer.rows;
  spec.in_bits = model.input_bits;
  spec.w_bits = layer.bits;
  spec.in_signed = false;
  spec.w_signed = layer.is_signed;

  std::vector<SweepPoint> points;
  points.reserve(sigmas.size());
  for (double sigma : sigmas) {
    AnalogConfig cfg = base;
    cfg.noise_sigma_lsb = sigma;
    AnalogBackendSelector selector(cfg);
    const MacBackend& probe = selector.layer_backend(layer, model.input_bits);
    SweepPoint pt;
    pt.sigma_lsb = sigma;
    pt.csnr_db = run_csnr_harness(probe, spec, csnr_trials, seed).csnr_db;
    pt.accuracy = dataset_accuracy(model, dataset, selector, seed);
    points.push_back(pt);
  }
  return points;
}

}  // namespace cimsim

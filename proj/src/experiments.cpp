#include "cimsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "cimsim/dcim.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/hybrid.hpp"
#include "cimsim/net.hpp"
#include "cimsim/rng.hpp"

namespace cimsim {

namespace {

using nlohmann::json;

const json& require_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(std::string("missing config field '") + key + "'");
  }
  return *it;
}

AnalogConfig parse_analog(const json& j) {
  if (!j.is_object()) throw ConfigError("'analog' must be an object");
  if (j.contains("seed")) {
    throw ConfigError("put the seed at the config top level, not in 'analog'");
  }
  AnalogConfig cfg;
  cfg.rows = require_field(j, "rows").get<std::size_t>();
  if (j.contains("adc_resolution")) {
    cfg.adc_resolution = j.at("adc_resolution").get<int>();
  }
  if (j.contains("noise_sigma_lsb")) {
    cfg.noise_sigma_lsb = j.at("noise_sigma_lsb").get<double>();
  }
  if (j.contains("mismatch_sigma")) {
    cfg.mismatch_sigma = j.at("mismatch_sigma").get<double>();
  }
  if (j.contains("cap_weight_sigma")) {
    cfg.cap_weight_sigma = j.at("cap_weight_sigma").get<double>();
  }
  if (j.contains("dac_bits")) cfg.dac_bits = j.at("dac_bits").get<int>();
  if (j.contains("mode")) {
    cfg.mode = analog_mode_from_string(j.at("mode").get<std::string>());
  }
  if (j.contains("readout")) {
    cfg.readout = readout_from_string(j.at("readout").get<std::string>());
  }
  if (j.contains("sparsity_adc")) {
    cfg.sparsity_adc = j.at("sparsity_adc").get<bool>();
  }
  cfg.validate();
  return cfg;
}

InputSpec parse_input(const json& j) {
  if (!j.is_object()) throw ConfigError("'input' must be an object");
  InputSpec spec;
  spec.n = require_field(j, "n").get<std::size_t>();
  spec.in_bits = require_field(j, "in_bits").get<int>();
  spec.w_bits = require_field(j, "w_bits").get<int>();
  if (j.contains("in_signed")) spec.in_signed = j.at("in_signed").get<bool>();
  if (j.contains("w_signed")) spec.w_signed = j.at("w_signed").get<bool>();
  spec.validate();
  return spec;
}

std::size_t default_trials(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::CsnrSweep:
      return 10000;
    case ExperimentKind::DatEval:
      return 10000;
    case ExperimentKind::ProbEval:
      return 2000;
    case ExperimentKind::SparsityEval:
      return 1;  // the table is analytic; trials is unused
    case ExperimentKind::HybridSweep:
      return 10000;
    case ExperimentKind::NetEval:
      return 10000;  // CSNR measurement trials
  }
  return 10000;
}

void check_sigmas(const std::vector<double>& sigmas) {
  if (sigmas.empty()) throw ConfigError("sweep.sigma_lsb must not be empty");
  for (double s : sigmas) {
    if (!(s >= 0) || !std::isfinite(s)) {
      throw ConfigError("sigma_lsb values must be finite and >= 0");
    }
  }
}

std::vector<std::uint8_t> draw_bits(Rng& rng, std::size_t n) {
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_below(2));
  return bits;
}

ExperimentReport run_csnr_sweep(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.columns = {"seed",       "sigma_lsb", "n",
                    "R",          "mode",      "csnr_db",
                    "saturation_rate"};
  double csnr_min = std::numeric_limits<double>::infinity();
  double csnr_max = -std::numeric_limits<double>::infinity();
  for (double sigma : cfg.sigma_sweep) {
    AnalogConfig ac = cfg.analog;
    ac.noise_sigma_lsb = sigma;
    ac.seed = cfg.seed;
    const AnalogMacBackend backend(ac);
    const CsnrReport rep = run_csnr_harness(backend, cfg.input, cfg.trials,
                                            cfg.seed);
    csnr_min = std::min(csnr_min, rep.csnr_db);
    csnr_max = std::max(csnr_max, rep.csnr_db);
    report.rows.push_back({std::to_string(cfg.seed), format_fixed(sigma),
                           std::to_string(cfg.input.n),
                           std::to_string(ac.adc_resolution),
                           to_string(ac.mode), format_fixed(rep.csnr_db),
                           format_fixed(rep.saturation_rate)});
  }
  report.summary["mode"] = to_string(cfg.analog.mode);
  report.summary["readout"] = to_string(cfg.analog.readout);
  report.summary["n"] = cfg.input.n;
  report.summary["adc_resolution"] = cfg.analog.adc_resolution;
  report.summary["csnr_db_min"] = format_fixed(csnr_min);
  report.summary["csnr_db_max"] = format_fixed(csnr_max);
  return report;
}

ExperimentReport run_dat_eval(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.columns = {"seed",        "fan_in",           "preset",
                    "transistors", "exact_transistors", "reduction",
                    "rmse"};
  const AdderTree exact(cfg.fan_in);
  const i64 exact_cost = exact.transistor_count();
  for (const std::string& name : cfg.presets) {
    const AdderTree tree(cfg.fan_in, dat_preset_from_string(name));
    const i64 cost = tree.transistor_count();
    const double reduction =
        1.0 - static_cast<double>(cost) / static_cast<double>(exact_cost);
    const double rmse = dat_rmse(tree, exact, cfg.trials, cfg.seed);
    report.rows.push_back({std::to_string(cfg.seed), std::to_string(cfg.fan_in),
                           name, std::to_string(cost),
                           std::to_string(exact_cost),
                           format_fixed(reduction), format_fixed(rmse)});
  }
  report.summary["fan_in"] = cfg.fan_in;
  return report;
}

ExperimentReport run_prob_eval(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.columns = {"seed", "n", "mode", "trials", "rmse"};
  const ProbMode mode =
      cfg.prob_mode == "expected" ? ProbMode::Expected : ProbMode::Sampled;
  for (std::size_t n : cfg.n_sweep) {
    double sq_sum = 0;
    for (std::size_t t = 0; t < cfg.trials; t++) {
      Rng rng(cfg.seed, StreamTag::kTrialInput, t, n);
      const auto in = draw_bits(rng, n);
      const auto w = draw_bits(rng, n);
      i64 exact = 0;
      for (std::size_t i = 0; i < n; i++) exact += in[i] & w[i];
      const ProbMacEstimate est = prob_mac(
          in, w, mode, derive_key(cfg.seed, StreamTag::kProbTrial, t, n));
      const double err = static_cast<double>(est.estimate - exact) /
                         static_cast<double>(n);
      sq_sum += err * err;
    }
    const double rmse = std::sqrt(sq_sum / static_cast<double>(cfg.trials));
    report.rows.push_back({std::to_string(cfg.seed), std::to_string(n),
                           cfg.prob_mode, std::to_string(cfg.trials),
                           format_fixed(rmse)});
  }
  report.summary["prob_mode"] = cfg.prob_mode;
  return report;
}

ExperimentReport run_sparsity_eval(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.columns = {"seed", "n", "R", "ones", "known_zero_bits",
                    "effective_bits"};
  for (i64 ones : cfg.ones_sweep) {
    const int zero_bits = sparsity_known_zero_bits(
        ones, cfg.sparsity_resolution, static_cast<double>(cfg.sparsity_n));
    report.rows.push_back(
        {std::to_string(cfg.seed), std::to_string(cfg.sparsity_n),
         std::to_string(cfg.sparsity_resolution), std::to_string(ones),
         std::to_string(zero_bits),
         std::to_string(cfg.sparsity_resolution - zero_bits)});
  }
  report.summary["n"] = cfg.sparsity_n;
  report.summary["adc_resolution"] = cfg.sparsity_resolution;
  return report;
}

ExperimentReport run_hybrid_sweep(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.columns = {"seed",        "boundary",       "digital_pairs",
                    "total_pairs", "mean_abs_error", "csnr_db"};
  const int m = cfg.input.in_bits;
  const int p = cfg.input.w_bits;
  std::vector<int> boundaries = cfg.boundary_sweep;
  if (boundaries.empty()) {
    for (int b = 0; b <= m + p - 1; b++) boundaries.push_back(b);
  }
  AnalogConfig ac = cfg.analog;
  ac.seed = cfg.seed;
  const MacroInstance inst(ac);
  for (int boundary : boundaries) {
    const DomainAssignment split =
        DomainAssignment::straight_split(m, p, boundary);
    double abs_sum = 0;
    double signal_sq = 0;
    double error_sq = 0;
    for (std::size_t t = 0; t < cfg.trials; t++) {
      Rng rng(cfg.seed, StreamTag::kTrialInput, t);
      const QuantVector in =
          QuantVector::random(rng, cfg.input.n, m, cfg.input.in_signed);
      const QuantVector w =
          QuantVector::random(rng, cfg.input.n, p, cfg.input.w_signed);
      const i64 dmac = dot_oracle(in, w);
      const MacResult got = hybrid_mac(in, w, split, inst, t);
      const double err = static_cast<double>(got.value - dmac);
      abs_sum += std::abs(err);
      signal_sq += static_cast<double>(dmac) * static_cast<double>(dmac);
      error_sq += err * err;
    }
    const double csnr =
        error_sq == 0 ? std::numeric_limits<double>::infinity()
                      : 10.0 * std::log10(signal_sq / error_sq);
    report.rows.push_back(
        {std::to_string(cfg.seed), std::to_string(boundary),
         std::to_string(split.digital_pairs()), std::to_string(m * p),
         format_fixed(abs_sum / static_cast<double>(cfg.trials)),
         format_fixed(csnr)});
  }
  report.summary["input_planes"] = m;
  report.summary["weight_planes"] = p;
  return report;
}

ExperimentReport run_net_eval(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.columns = {"seed", "sigma_lsb", "csnr_db", "accuracy"};
  const QuantModel model = load_model(cfg.model_path);
  const Dataset dataset = load_dataset(cfg.dataset_path, model.input_bits);
  AnalogConfig ac = cfg.analog;
  ac.seed = cfg.seed;
  const std::vector<SweepPoint> points = accuracy_vs_csnr_sweep(
      model, dataset, cfg.sigma_sweep, ac, cfg.trials, cfg.seed);
  for (const SweepPoint& pt : points) {
    report.rows.push_back({std::to_string(cfg.seed),
                           format_fixed(pt.sigma_lsb),
                           format_fixed(pt.csnr_db),
                           format_fixed(pt.accuracy)});
  }
  const DigitalBackendSelector digital;
  report.summary["digital_accuracy"] =
      format_fixed(dataset_accuracy(model, dataset, digital, cfg.seed));
  report.summary["samples"] = dataset.features.size();
  report.summary["classes"] = dataset.classes;
  return report;
}

}  // namespace

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "csnr-sweep") return ExperimentKind::CsnrSweep;
  if (name == "dat-eval") return ExperimentKind::DatEval;
  if (name == "prob-eval") return ExperimentKind::ProbEval;
  if (name == "sparsity-eval") return ExperimentKind::SparsityEval;
  if (name == "hybrid-sweep") return ExperimentKind::HybridSweep;
  if (name == "net-eval") return ExperimentKind::NetEval;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::CsnrSweep:
      return "csnr-sweep";
    case ExperimentKind::DatEval:
      return "dat-eval";
    case ExperimentKind::ProbEval:
      return "prob-eval";
    case ExperimentKind::SparsityEval:
      return "sparsity-eval";
    case ExperimentKind::HybridSweep:
      return "hybrid-sweep";
    case ExperimentKind::NetEval:
      return "net-eval";
  }
  return "csnr-sweep";
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (format != "csv" && format != "json") {
    throw ConfigError("format must be csv|json");
  }
  switch (kind) {
    case ExperimentKind::CsnrSweep: {
      analog.validate();
      input.validate();
      if (input.n != analog.rows) {
        throw ConfigError("input.n must equal analog.rows");
      }
      check_sigmas(sigma_sweep);
      if (analog.mode == AnalogMode::BitParallel) {
        if (input.in_signed || input.in_bits > analog.dac_bits) {
          throw ConfigError(
              "bit-parallel sweeps need unsigned inputs no wider than "
              "dac_bits");
        }
      }
      if (analog.mode == AnalogMode::OneShotMultiBit) {
        if (input.in_bits != 1 || input.in_signed || input.w_signed) {
          throw ConfigError(
              "one-shot sweeps need 1-bit unsigned inputs and unsigned "
              "weights");
        }
      }
      break;
    }
    case ExperimentKind::DatEval: {
      if (fan_in < 2) throw ConfigError("fan_in must be >= 2");
      if (fan_in > (std::size_t{1} << 20)) {
        throw ConfigError("fan_in must be <= 2^20");
      }
      if (presets.empty()) throw ConfigError("presets must not be empty");
      for (const std::string& name : presets) dat_preset_from_string(name);
      if (trials < 1000) {
        throw ConfigError("dat-eval needs trials >= 1000 for a stable RMSE");
      }
      break;
    }
    case ExperimentKind::ProbEval: {
      if (n_sweep.empty()) throw ConfigError("sweep.n must not be empty");
      for (std::size_t n : n_sweep) {
        if (n < 1 || n > (std::size_t{1} << 20)) {
          throw ConfigError("sweep.n values must be in [1, 2^20]");
        }
      }
      if (prob_mode != "expected" && prob_mode != "sampled") {
        throw ConfigError("mode must be expected|sampled");
      }
      break;
    }
    case ExperimentKind::SparsityEval: {
      if (sparsity_n < 1 || sparsity_n > (std::size_t{1} << 20)) {
        throw ConfigError("n must be in [1, 2^20]");
      }
      if (sparsity_resolution < 1 || sparsity_resolution > kMaxBitWidth) {
        throw ConfigError("adc_resolution must be in [1, " +
                          std::to_string(kMaxBitWidth) + "]");
      }
      if (ones_sweep.empty()) throw ConfigError("sweep.ones must not be empty");
      for (i64 ones : ones_sweep) {
        if (ones < 0 || ones > static_cast<i64>(sparsity_n)) {
          throw ConfigError("sweep.ones values must be in [0, n]");
        }
      }
      break;
    }
    case ExperimentKind::HybridSweep: {
      analog.validate();
      input.validate();
      if (analog.mode != AnalogMode::BitSerial) {
        throw ConfigError("hybrid-sweep needs bit-serial mode");
      }
      if (input.n != analog.rows) {
        throw ConfigError("input.n must equal analog.rows");
      }
      const int top = input.in_bits + input.w_bits - 1;
      for (int b : boundary_sweep) {
        if (b < 0 || b > top) {
          throw ConfigError("sweep.boundary values must be in [0, " +
                            std::to_string(top) + "]");
        }
      }
      break;
    }
    case ExperimentKind::NetEval: {
      analog.validate();
      if (model_path.empty()) throw ConfigError("model path must be set");
      if (dataset_path.empty()) throw ConfigError("dataset path must be set");
      check_sigmas(sigma_sweep);
      break;
    }
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " +
                      std::string(e.what()));
  }
  ExperimentConfig cfg;
  try {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (require_field(doc, "schema_version").get<int>() != 1) {
      throw ConfigError("unsupported config schema_version (want 1)");
    }
    cfg.kind = experiment_kind_from_string(
        require_field(doc, "experiment").get<std::string>());
    if (doc.contains("seed")) {
      cfg.has_seed = true;
      cfg.seed = doc.at("seed").get<u64>();
    }
    cfg.trials = doc.value("trials", default_trials(cfg.kind));
    cfg.out = doc.value("out", std::string{});
    cfg.format = doc.value("format", std::string{"csv"});
    const json sweep = doc.value("sweep", json::object());

    switch (cfg.kind) {
      case ExperimentKind::CsnrSweep:
        cfg.analog = parse_analog(require_field(doc, "analog"));
        cfg.input = parse_input(require_field(doc, "input"));
        cfg.sigma_sweep =
            require_field(sweep, "sigma_lsb").get<std::vector<double>>();
        break;
      case ExperimentKind::DatEval:
        cfg.fan_in = require_field(doc, "fan_in").get<std::size_t>();
        cfg.presets = doc.value(
            "presets",
            std::vector<std::string>{"exact", "mid", "aggressive"});
        break;
      case ExperimentKind::ProbEval:
        cfg.n_sweep =
            require_field(sweep, "n").get<std::vector<std::size_t>>();
        cfg.prob_mode = doc.value("mode", std::string{"sampled"});
        break;
      case ExperimentKind::SparsityEval:
        cfg.sparsity_n = require_field(doc, "n").get<std::size_t>();
        cfg.sparsity_resolution =
            require_field(doc, "adc_resolution").get<int>();
        cfg.ones_sweep =
            require_field(sweep, "ones").get<std::vector<i64>>();
        break;
      case ExperimentKind::HybridSweep:
        cfg.analog = parse_analog(require_field(doc, "analog"));
        cfg.input = parse_input(require_field(doc, "input"));
        if (sweep.contains("boundary")) {
          cfg.boundary_sweep = sweep.at("boundary").get<std::vector<int>>();
        }
        break;
      case ExperimentKind::NetEval: {
        cfg.analog = parse_analog(require_field(doc, "analog"));
        cfg.sigma_sweep =
            require_field(sweep, "sigma_lsb").get<std::vector<double>>();
        const auto base = std::filesystem::path(path).parent_path();
        auto resolve = [&base](const std::string& p) {
          const std::filesystem::path fp(p);
          return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        cfg.model_path =
            resolve(require_field(doc, "model").get<std::string>());
        cfg.dataset_path =
            resolve(require_field(doc, "dataset").get<std::string>());
        break;
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' schema violation: " +
                      std::string(e.what()));
  }
  cfg.validate();
  return cfg;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (!cfg.has_seed) {
    throw ConfigError("no seed: set \"seed\" in the config or pass --seed");
  }
  cfg.validate();
  ExperimentReport report;
  switch (cfg.kind) {
    case ExperimentKind::CsnrSweep:
      report = run_csnr_sweep(cfg);
      break;
    case ExperimentKind::DatEval:
      report = run_dat_eval(cfg);
      break;
    case ExperimentKind::ProbEval:
      report = run_prob_eval(cfg);
      break;
    case ExperimentKind::SparsityEval:
      report = run_sparsity_eval(cfg);
      break;
    case ExperimentKind::HybridSweep:
      report = run_hybrid_sweep(cfg);
      break;
    case ExperimentKind::NetEval:
      report = run_net_eval(cfg);
      break;
  }
  report.summary["schema_version"] = 1;
  report.summary["experiment"] = to_string(cfg.kind);
  report.summary["seed"] = cfg.seed;
  report.summary["trials"] = cfg.trials;
  report.summary["row_count"] = report.rows.size();
  return report;
}

std::string render_csv(const ExperimentReport& report) {
  std::string text;
  auto append_line = [&text](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); i++) {
      if (i) text += ',';
      text += cells[i];
    }
    text += '\n';
  };
  append_line(report.columns);
  for (const auto& row : report.rows) {
    if (row.size() != report.columns.size()) {
      throw Error("report row width does not match its header");
    }
    append_line(row);
  }
  return text;
}

std::vector<std::string> write_report(const ExperimentReport& report,
                                      const std::string& out_path,
                                      const std::string& format) {
  namespace fs = std::filesystem;
  if (out_path.empty()) throw ConfigError("output path must not be empty");

  auto write_whole = [](const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open output file '" + path + "'");
    f << text;
    f.flush();
    if (!f) throw Error("failed writing '" + path + "'");
  };

  std::vector<std::string> written;
  if (format == "csv") {
    write_whole(out_path, render_csv(report));
    written.push_back(out_path);
    fs::path summary_path(out_path);
    if (summary_path.extension() == ".csv") {
      summary_path.replace_extension(".json");
    } else {
      summary_path += ".json";
    }
    write_whole(summary_path.string(), report.summary.dump(2) + "\n");
    written.push_back(summary_path.string());
  } else if (format == "json") {
    json doc;
    doc["schema_version"] = 1;
    doc["summary"] = report.summary;
    doc["columns"] = report.columns;
    doc["rows"] = report.rows;
    write_whole(out_path, doc.dump(2) + "\n");
    written.push_back(out_path);
  } else {
    throw ConfigError("format must be csv|json");
  }
  return written;
}

std::string format_fixed(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

}  // namespace cimsim

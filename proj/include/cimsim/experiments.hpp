#pragma once

// Experiment configs, runners, and report writers behind the CLI. A config is
// one JSON file naming exactly one experiment kind; a run turns it into a
// fixed-header table plus a JSON summary. Identical config + seed gives
// byte-identical CSV: fixed headers, '.' decimals, %.6f doubles, LF line
// endings, and "inf"/"-inf" for unbounded dB values.

#include <string>
#include <vector>

#include <json.hpp>

#include "cimsim/acim.hpp"
#include "cimsim/csnr.hpp"

namespace cimsim {

enum class ExperimentKind {
  CsnrSweep,
  DatEval,
  ProbEval,
  SparsityEval,
  HybridSweep,
  NetEval,
};

ExperimentKind experiment_kind_from_string(const std::string& name);
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::CsnrSweep;
  bool has_seed = false;  // a run refuses to start without a seed
  u64 seed = 0;
  std::size_t trials = 0;      // per-kind default applied at load
  std::string out;             // empty -> "<kind>.<format>"
  std::string format = "csv";  // csv | json

  AnalogConfig analog;  // csnr-sweep, hybrid-sweep, net-eval
  InputSpec input;      // csnr-sweep, hybrid-sweep

  std::vector<double> sigma_sweep;  // csnr-sweep, net-eval

  std::size_t fan_in = 0;            // dat-eval
  std::vector<std::string> presets;  // dat-eval

  std::vector<std::size_t> n_sweep;  // prob-eval
  std::string prob_mode = "sampled";

  std::size_t sparsity_n = 0;  // sparsity-eval
  int sparsity_resolution = 0;
  std::vector<i64> ones_sweep;

  std::vector<int> boundary_sweep;  // hybrid-sweep; empty -> 0..m+p-1

  std::string model_path;  // net-eval; resolved against the config file's dir
  std::string dataset_path;

  // Cross-field checks (sweep axes non-empty, shapes consistent, mode
  // restrictions). Does not require a seed; call after applying overrides.
  void validate() const;
};

// Parse a config file. File and schema problems throw ConfigError.
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentReport {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;  // cells pre-formatted
  nlohmann::json summary;
};

// Requires cfg.has_seed and cfg.validate() to hold.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

std::string render_csv(const ExperimentReport& report);

// format "csv": CSV at out_path plus the summary JSON next to it (a .csv
// extension becomes .json, anything else gets .json appended). format
// "json": one JSON file at out_path holding summary, columns, and rows.
// Each file is built in memory and written whole. Returns the paths written.
std::vector<std::string> write_report(const ExperimentReport& report,
                                      const std::string& out_path,
                                      const std::string& format);

// "%.6f" with '.' decimal; infinities render as "inf"/"-inf".
std::string format_fixed(double value);

}  // namespace cimsim

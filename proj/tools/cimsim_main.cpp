#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cimsim/errors.hpp"
#include "cimsim/experiments.hpp"

namespace {

void emit_error(const char* kind, const std::string& message) {
  nlohmann::json err;
  err["error"] = {{"kind", kind}, {"message", message}};
  std::fprintf(stderr, "%s\n", err.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SRAM compute-in-memory macro simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format;
  std::uint64_t seed = 0;
  std::size_t trials = 0;

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"csnr-sweep", "Measured CSNR across a noise ladder"},
      {"dat-eval", "Adder-tree preset cost and error table"},
      {"prob-eval", "Bernoulli MAC estimator error vs vector length"},
      {"sparsity-eval", "ADC bits provably skippable at a given popcount"},
      {"hybrid-sweep", "Hybrid digital/analog error vs split boundary"},
      {"net-eval", "MLP accuracy vs measured CSNR across a noise ladder"},
  };
  for (const auto& [name, description] : kinds) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "Experiment config (JSON)")
        ->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--trials", trials, "Override the config trial count");
    sub->add_option("--out", out_path, "Override the config output path");
    sub->add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"csv", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    emit_error("config", e.what());
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    cimsim::ExperimentConfig cfg =
        cimsim::load_experiment_config(config_path);
    if (cimsim::to_string(cfg.kind) != sub->get_name()) {
      throw cimsim::ConfigError("config is for experiment '" +
                                cimsim::to_string(cfg.kind) +
                                "', not '" + sub->get_name() + "'");
    }
    if (sub->count("--seed")) {
      cfg.seed = seed;
      cfg.has_seed = true;
    }
    if (sub->count("--trials")) cfg.trials = trials;
    if (sub->count("--out")) cfg.out = out_path;
    if (sub->count("--format")) cfg.format = format;
    if (!cfg.has_seed) {
      throw cimsim::ConfigError(
          "no seed: set \"seed\" in the config or pass --seed");
    }
    cfg.validate();

    const cimsim::ExperimentReport report = cimsim::run_experiment(cfg);
    const std::string out =
        cfg.out.empty()
            ? cimsim::to_string(cfg.kind) +
                  (cfg.format == "csv" ? ".csv" : ".json")
            : cfg.out;
    for (const std::string& path :
         cimsim::write_report(report, out, cfg.format)) {
      std::printf("wrote %s\n", path.c_str());
    }
    return 0;
  } catch (const cimsim::ConfigError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const cimsim::SchemaError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error("runtime", e.what());
    return 3;
  }
}

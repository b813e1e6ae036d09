// Configuration-driven driver for the chain equilibrium / fluctuation /
// relaxation experiments. Exit codes: 0 success, 1 validation failure,
// 2 config error, 3 numerical failure.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "relent/config.hpp"
#include "relent/errors.hpp"
#include "relent/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"relent: one-dimensional chain statistics and relaxation thermodynamics"};
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> engine;
  bool quiet = false;
  app.add_option("--config", config_path, "INI config file")->required();
  app.add_option("--output", output_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "RNG seed (overrides config)");
  app.add_option("--engine", engine, "relaxation engine: langevin | fp")
      ->check(CLI::IsMember({"langevin", "fp"}));
  app.add_flag("--quiet", quiet, "suppress progress output");
  CLI11_PARSE(app, argc, argv);

  try {
    relent::ExperimentConfig cfg = relent::parse_config(config_path);
    if (output_dir) cfg.output_dir = *output_dir;
    if (seed) {
      cfg.seed = *seed;
      cfg.seed_set = true;
    }
    if (engine) cfg.engine = *engine;
    cfg.quiet = quiet;
    relent::validate_config(cfg);

    if (cfg.experiment == "equilibrium") return relent::run_equilibrium(cfg);
    if (cfg.experiment == "fluctuation") return relent::run_fluctuation(cfg);
    if (cfg.experiment == "relax") return relent::run_relax(cfg);
    return relent::run_validate(cfg);
  } catch (const relent::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const relent::NonConvergent& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const relent::StabilityViolation& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const relent::NegativeDensity& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const relent::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

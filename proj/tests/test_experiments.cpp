#include <catch.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "relent/config.hpp"
#include "relent/experiments.hpp"

using namespace relent;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("relent_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_summary(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line == "key,value") continue;
    const auto comma = line.find(',');
    if (comma != std::string::npos) kv[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return kv;
}

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.seed = 42;
  cfg.seed_set = true;
  cfg.quiet = true;
  return cfg;
}

}  // namespace

TEST_CASE("config files parse into the experiment configuration") {
  const fs::path dir = temp_dir("cfg");
  const fs::path file = dir / "a.ini";
  {
    std::ofstream out(file);
    out << "# comment\n[chain]\nn = 3\npotential = double_well\na = 1.5\nb = 2.5\nc = 0.1\n"
        << "kBT = 0.8\neta = 2.0\ndomain = full_line\ncutoff = auto\n"
        << "[experiment]\ntype = relax\nseed = 99\noutput_dir = somewhere\n"
        << "[numerics]\ncells = 128\ndt = 1e-5\nt_final = 0.25\nengine = langevin\n"
        << "sweep = 10, 20, 40\ninit_mean = 0.5, 0.5, 0.5\n";
  }
  const ExperimentConfig cfg = parse_config(file.string());
  CHECK(cfg.n == 3);
  CHECK(cfg.potential == "double_well");
  CHECK(cfg.pot_params.at("a") == 1.5);
  CHECK(cfg.kBT == 0.8);
  CHECK(cfg.domain == "full_line");
  CHECK(cfg.experiment == "relax");
  CHECK(cfg.seed == 99);
  CHECK(cfg.seed_set);
  CHECK(cfg.output_dir == "somewhere");
  CHECK(cfg.cells == 128);
  CHECK(cfg.dt == 1e-5);
  CHECK(cfg.engine == "langevin");
  CHECK(cfg.sweep == std::vector<long long>{10, 20, 40});
  CHECK(cfg.init_mean.size() == 3);
  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("config parsing rejects unknown fields and malformed lines") {
  const fs::path dir = temp_dir("cfg_bad");
  {
    std::ofstream out(dir / "unknown.ini");
    out << "[chain]\nnn = 3\n";
  }
  CHECK_THROWS_AS(parse_config((dir / "unknown.ini").string()), ConfigError);
  {
    std::ofstream out(dir / "nokey.ini");
    out << "[chain]\njust a line\n";
  }
  CHECK_THROWS_AS(parse_config((dir / "nokey.ini").string()), ConfigError);
  CHECK_THROWS_AS(parse_config((dir / "missing.ini").string()), ConfigError);
}

TEST_CASE("config validation names the offending field") {
  ExperimentConfig cfg = base_config();
  cfg.seed_set = false;
  CHECK_THROWS_WITH(validate_config(cfg), Catch::Contains("experiment.seed"));

  cfg = base_config();
  cfg.dt = -1.0;
  CHECK_THROWS_WITH(validate_config(cfg), Catch::Contains("numerics.dt"));

  cfg = base_config();
  cfg.cells = 8;
  CHECK_THROWS_WITH(validate_config(cfg), Catch::Contains("numerics.cells"));

  cfg = base_config();
  cfg.kBT = 0.0;
  CHECK_THROWS_WITH(validate_config(cfg), Catch::Contains("chain.kBT"));

  cfg = base_config();
  cfg.engine = "magic";
  CHECK_THROWS_WITH(validate_config(cfg), Catch::Contains("numerics.engine"));
}

TEST_CASE("stability violations surface a suggested dt") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "relax";
  cfg.engine = "fp";
  cfg.domain = "full_line";
  cfg.cells = 64;
  cfg.grid_lo = -8.0;
  cfg.grid_hi = 8.0;
  cfg.dt = 0.5;  // far above 0.4 eta h^2 / kBT
  cfg.output_dir = temp_dir("stab").string();
  CHECK_THROWS_WITH(run_relax(cfg), Catch::Contains("use dt <="));
}

TEST_CASE("equilibrium run with N = 1 writes identical subunit and end files") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "equilibrium";
  cfg.n = 1;
  cfg.domain = "full_line";
  cfg.cells = 256;
  cfg.walkers = 5000;
  cfg.output_dir = temp_dir("eq1").string();
  REQUIRE(run_equilibrium(cfg) == 0);
  CHECK(slurp(fs::path(cfg.output_dir) / "subunit_density.csv") ==
        slurp(fs::path(cfg.output_dir) / "end_marginal.csv"));
}

TEST_CASE("equilibrium runs are bit-identical under a repeated seed") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "equilibrium";
  cfg.n = 2;
  cfg.domain = "full_line";
  cfg.cells = 128;
  cfg.walkers = 2000;
  cfg.output_dir = temp_dir("eqdet_a").string();
  REQUIRE(run_equilibrium(cfg) == 0);
  ExperimentConfig cfg2 = cfg;
  cfg2.output_dir = temp_dir("eqdet_b").string();
  REQUIRE(run_equilibrium(cfg2) == 0);
  for (const char* name : {"subunit_density.csv", "end_marginal.csv", "end_free_energy.csv",
                           "samples.csv", "sampled_end_hist.csv", "summary.csv"})
    CHECK(slurp(fs::path(cfg.output_dir) / name) == slurp(fs::path(cfg2.output_dir) / name));
}

TEST_CASE("equilibrium run reproduces the analytic end variance") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "equilibrium";
  cfg.n = 4;
  cfg.domain = "full_line";
  cfg.cells = 1024;
  cfg.walkers = 20000;
  cfg.output_dir = temp_dir("eq4").string();
  REQUIRE(run_equilibrium(cfg) == 0);
  const auto kv = read_summary(fs::path(cfg.output_dir) / "summary.csv");
  const double var = std::stod(kv.at("marginal_var"));
  CHECK(var == Approx(4.0).epsilon(0.01));  // N kBT / k
  CHECK(kv.at("ks_pass") == "1");
}

TEST_CASE("relax runs are bit-identical under a repeated seed") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "relax";
  cfg.engine = "fp";
  cfg.n = 1;
  cfg.domain = "full_line";
  cfg.grid_lo = -8.0;
  cfg.grid_hi = 8.0;
  cfg.cells = 128;
  cfg.dt = 0.3 * (16.0 / 128) * (16.0 / 128);
  cfg.t_final = 0.2;
  cfg.snapshot_every = 100;
  cfg.output_dir = temp_dir("det_a").string();
  REQUIRE(run_relax(cfg) == 0);
  ExperimentConfig cfg2 = cfg;
  cfg2.output_dir = temp_dir("det_b").string();
  REQUIRE(run_relax(cfg2) == 0);
  for (const char* name : {"thermo.csv", "snapshots.csv", "summary.csv"})
    CHECK(slurp(fs::path(cfg.output_dir) / name) == slurp(fs::path(cfg2.output_dir) / name));
}

TEST_CASE("relax from the Boltzmann state stays flat and passes") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "relax";
  cfg.engine = "fp";
  cfg.n = 1;
  cfg.domain = "full_line";
  cfg.grid_lo = -9.0;
  cfg.grid_hi = 9.0;
  cfg.cells = 256;
  cfg.dt = 0.3 * (18.0 / 256) * (18.0 / 256);
  cfg.t_final = 0.5;
  cfg.init = "boltzmann";
  cfg.output_dir = temp_dir("flat").string();
  REQUIRE(run_relax(cfg) == 0);
  const auto kv = read_summary(fs::path(cfg.output_dir) / "summary.csv");
  CHECK(kv.at("verdict") == "PASS");

  // psi column is flat to 1e-8 relative
  std::ifstream in(fs::path(cfg.output_dir) / "thermo.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);  // header rows
  double psi0 = 0.0;
  bool first = true;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string t, psi;
    std::getline(ss, t, ',');
    std::getline(ss, psi, ',');
    const double v = std::stod(psi);
    if (first) {
      psi0 = v;
      first = false;
    }
    CHECK(std::abs(v - psi0) <= 1e-8 * std::abs(psi0));
  }
}

TEST_CASE("relax of a shifted Gaussian passes and drives the relative entropy down") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "relax";
  cfg.engine = "fp";
  cfg.n = 1;
  cfg.domain = "full_line";
  cfg.grid_lo = -9.0;
  cfg.grid_hi = 9.0;
  cfg.cells = 256;
  cfg.dt = 0.3 * (18.0 / 256) * (18.0 / 256);
  cfg.t_final = 3.0;
  cfg.init = "gaussian";
  cfg.init_mean = {1.5};
  cfg.init_sigma = {0.5};
  cfg.output_dir = temp_dir("gauss").string();
  REQUIRE(run_relax(cfg) == 0);
  const auto kv = read_summary(fs::path(cfg.output_dir) / "summary.csv");
  CHECK(kv.at("verdict") == "PASS");
  CHECK(std::stod(kv.at("final_rel_entropy")) < 0.02);
}

TEST_CASE("langevin relax emits estimates with error bars and passes") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "relax";
  cfg.engine = "langevin";
  cfg.n = 2;
  cfg.domain = "full_line";
  cfg.grid_lo = -8.0;
  cfg.grid_hi = 8.0;
  cfg.cells = 128;
  cfg.walkers = 20000;
  cfg.dt = 2e-3;
  cfg.t_final = 1.0;
  cfg.snapshot_every = 250;
  cfg.init = "gaussian";
  cfg.init_mean = {1.2, -0.8};
  cfg.init_sigma = {0.5, 0.7};
  cfg.output_dir = temp_dir("lang").string();
  REQUIRE(run_relax(cfg) == 0);
  CHECK(fs::exists(fs::path(cfg.output_dir) / "psi_stderr.csv"));
  const auto kv = read_summary(fs::path(cfg.output_dir) / "summary.csv");
  CHECK(kv.at("verdict") == "PASS");
}

TEST_CASE("langevin relax with N > 2 still streams observables and snapshots") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "relax";
  cfg.engine = "langevin";
  cfg.n = 3;
  cfg.domain = "half_line";
  cfg.potential = "soft_wall";
  cfg.pot_params = {{"k", 4.0}, {"x0", 1.0}, {"wall_strength", 4.0}};
  cfg.walkers = 2000;
  cfg.dt = 1e-3;
  cfg.t_final = 0.1;
  cfg.snapshot_every = 50;
  cfg.init = "equilibrium";
  cfg.output_dir = temp_dir("lang3").string();
  REQUIRE(run_relax(cfg) == 0);
  const auto kv = read_summary(fs::path(cfg.output_dir) / "summary.csv");
  CHECK(kv.at("verdict") == "NA");  // Psi estimator is defined for N <= 2 only
  CHECK(fs::exists(fs::path(cfg.output_dir) / "observables.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "snapshots.csv"));

  // started at equilibrium: pooled extension variance stays at the
  // quadrature value for this (wall-reshaped) density
  const Moments mom = extension_moments(build_chain(cfg));
  std::ifstream in(fs::path(cfg.output_dir) / "observables.csv");
  std::string line;
  double last_var = -1.0;
  while (std::getline(in, line))
    if (line.find("extension_variance") != std::string::npos)
      last_var = std::stod(line.substr(line.rfind(',') + 1));
  CHECK(last_var == Approx(mom.var).epsilon(0.1));
}

TEST_CASE("fluctuation run emits the sweep with a shrinking per-subunit gap") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "fluctuation";
  cfg.n = 1000;
  cfg.potential = "harmonic";
  cfg.pot_params = {{"k", 4.0}, {"x0", 1.0}};
  cfg.domain = "half_line";
  cfg.bins = 8;
  cfg.repeats = 50;
  cfg.sweep = {100, 1000, 10000};
  cfg.output_dir = temp_dir("fluct").string();
  REQUIRE(run_fluctuation(cfg) == 0);
  const auto kv = read_summary(fs::path(cfg.output_dir) / "summary.csv");
  CHECK(kv.at("gap_per_subunit_decreasing") == "1");
  CHECK(fs::exists(fs::path(cfg.output_dir) / "per_sample.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "sanov_sweep.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "empirical.csv"));
}

TEST_CASE("the shipped validation suite passes end to end") {
  ExperimentConfig cfg = base_config();
  cfg.experiment = "validate";
  cfg.seed = 20240817;
  REQUIRE(run_validate(cfg) == 0);
}

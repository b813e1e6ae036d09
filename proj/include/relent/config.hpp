#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "relent/chain.hpp"
#include "relent/errors.hpp"
#include "relent/io.hpp"
#include "relent/potential.hpp"

namespace relent {

/// Flat INI-style configuration mirroring the experiment setup: sections
/// [chain], [experiment], [numerics]; `key = value` lines; `#` comments.
struct ExperimentConfig {
  // [chain]
  int n = 1;
  std::string potential = "harmonic";
  std::map<std::string, double> pot_params;  // k, x0, a, b, c, wall_strength
  double kBT = 1.0;
  double eta = 1.0;
  std::string domain = "half_line";  // half_line | full_line
  double cutoff = 0.0;               // 0 = auto

  // [experiment]
  std::string experiment = "validate";  // equilibrium | fluctuation | relax | validate
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output_dir = "out";

  // [numerics]
  double grid_lo = 0.0, grid_hi = 0.0;  // 0,0 = use the coordinate domain
  int cells = 256;
  int end_cells = 0;  // 0 = same as cells
  double dt = 1e-4;
  double t_final = 1.0;
  long long walkers = 10000;
  int bins = 50;
  int repeats = 100;
  std::vector<long long> sweep = {100, 1000, 10000};
  std::string engine = "fp";  // fp | langevin
  int snapshot_every = 100;
  std::string init = "gaussian";  // boltzmann | gaussian | equilibrium (langevin)
  std::vector<double> init_mean = {1.0};
  std::vector<double> init_sigma = {0.5};

  bool quiet = false;

  /// Canonical sorted key=value dump; hashing it pins outputs to the exact
  /// configuration (after CLI overrides).
  std::string canonical() const {
    std::vector<std::string> lines;
    const auto add = [&](const std::string& k, const std::string& v) {
      lines.push_back(k + "=" + v);
    };
    add("chain.n", std::to_string(n));
    add("chain.potential", potential);
    for (const auto& [k, v] : pot_params) add("chain." + k, fmt17(v));
    add("chain.kBT", fmt17(kBT));
    add("chain.eta", fmt17(eta));
    add("chain.domain", domain);
    add("chain.cutoff", fmt17(cutoff));
    add("experiment.type", experiment);
    add("experiment.seed", std::to_string(seed));
    add("numerics.grid_lo", fmt17(grid_lo));
    add("numerics.grid_hi", fmt17(grid_hi));
    add("numerics.cells", std::to_string(cells));
    add("numerics.end_cells", std::to_string(end_cells));
    add("numerics.dt", fmt17(dt));
    add("numerics.t_final", fmt17(t_final));
    add("numerics.walkers", std::to_string(walkers));
    add("numerics.bins", std::to_string(bins));
    add("numerics.repeats", std::to_string(repeats));
    {
      std::string s;
      for (long long v : sweep) s += std::to_string(v) + ";";
      add("numerics.sweep", s);
    }
    add("numerics.engine", engine);
    add("numerics.snapshot_every", std::to_string(snapshot_every));
    add("numerics.init", init);
    {
      std::string s;
      for (double v : init_mean) s += fmt17(v) + ";";
      add("numerics.init_mean", s);
      s.clear();
      for (double v : init_sigma) s += fmt17(v) + ";";
      add("numerics.init_sigma", s);
    }
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
  }

  std::uint64_t hash() const { return fnv1a64(canonical()); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("field '" + key + "': cannot parse '" + v + "' as a number");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("field '" + key + "': cannot parse '" + v + "' as an integer");
  }
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& key, const std::string& v, Parse&& parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse(key, item));
  }
  if (out.empty()) throw ConfigError("field '" + key + "': empty list");
  return out;
}

}  // namespace detail

/// Parses an INI config file. Unknown keys are rejected so that typos cannot
/// silently fall back to defaults.
inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ExperimentConfig cfg;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    using detail::parse_double;
    using detail::parse_int;
    if (section == "chain") {
      if (key == "n" || key == "N") cfg.n = static_cast<int>(parse_int(full, val));
      else if (key == "potential") cfg.potential = val;
      else if (key == "kBT" || key == "kbt") cfg.kBT = parse_double(full, val);
      else if (key == "eta") cfg.eta = parse_double(full, val);
      else if (key == "domain") cfg.domain = val;
      else if (key == "cutoff") cfg.cutoff = val == "auto" ? 0.0 : parse_double(full, val);
      else if (key == "k" || key == "x0" || key == "a" || key == "b" || key == "c" ||
               key == "wall_strength")
        cfg.pot_params[key] = parse_double(full, val);
      else throw ConfigError("unknown field '" + full + "'");
    } else if (section == "experiment") {
      if (key == "type") cfg.experiment = val;
      else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(full, val));
        cfg.seed_set = true;
      } else if (key == "output_dir") cfg.output_dir = val;
      else throw ConfigError("unknown field '" + full + "'");
    } else if (section == "numerics") {
      if (key == "grid_lo") cfg.grid_lo = parse_double(full, val);
      else if (key == "grid_hi") cfg.grid_hi = parse_double(full, val);
      else if (key == "cells") cfg.cells = static_cast<int>(parse_int(full, val));
      else if (key == "end_cells") cfg.end_cells = static_cast<int>(parse_int(full, val));
      else if (key == "dt") cfg.dt = parse_double(full, val);
      else if (key == "t_final") cfg.t_final = parse_double(full, val);
      else if (key == "walkers") cfg.walkers = parse_int(full, val);
      else if (key == "bins") cfg.bins = static_cast<int>(parse_int(full, val));
      else if (key == "repeats") cfg.repeats = static_cast<int>(parse_int(full, val));
      else if (key == "sweep") cfg.sweep = detail::parse_list<long long>(full, val, parse_int);
      else if (key == "engine") cfg.engine = val;
      else if (key == "snapshot_every")
        cfg.snapshot_every = static_cast<int>(parse_int(full, val));
      else if (key == "init") cfg.init = val;
      else if (key == "init_mean")
        cfg.init_mean = detail::parse_list<double>(full, val, parse_double);
      else if (key == "init_sigma")
        cfg.init_sigma = detail::parse_list<double>(full, val, parse_double);
      else throw ConfigError("unknown field '" + full + "'");
    } else {
      throw ConfigError("unknown section '" + section + "'");
    }
  }
  return cfg;
}

/// Field-level validation; throws ConfigError naming the offending field.
inline void validate_config(const ExperimentConfig& cfg) {
  const auto positive = [](double v, const char* field) {
    if (!(v > 0)) throw ConfigError(std::string("field '") + field + "' must be positive");
  };
  if (cfg.n < 1) throw ConfigError("field 'chain.n' must be >= 1");
  positive(cfg.kBT, "chain.kBT");
  positive(cfg.eta, "chain.eta");
  if (cfg.potential != "harmonic" && cfg.potential != "double_well" &&
      cfg.potential != "soft_wall")
    throw ConfigError("field 'chain.potential' must be harmonic, double_well or soft_wall");
  if (cfg.domain != "half_line" && cfg.domain != "full_line")
    throw ConfigError("field 'chain.domain' must be half_line or full_line");
  if (cfg.cutoff < 0) throw ConfigError("field 'chain.cutoff' must be positive or auto");
  if (cfg.experiment != "equilibrium" && cfg.experiment != "fluctuation" &&
      cfg.experiment != "relax" && cfg.experiment != "validate")
    throw ConfigError("field 'experiment.type' must be equilibrium, fluctuation, relax or validate");
  if (!cfg.seed_set) throw ConfigError("field 'experiment.seed' is mandatory (no wall-clock default)");
  if (cfg.cells < 16) throw ConfigError("field 'numerics.cells' must be >= 16");
  if (cfg.end_cells != 0 && cfg.end_cells < 16)
    throw ConfigError("field 'numerics.end_cells' must be >= 16 (or 0 for auto)");
  positive(cfg.dt, "numerics.dt");
  if (cfg.t_final < 0) throw ConfigError("field 'numerics.t_final' must be non-negative");
  if (cfg.walkers < 1) throw ConfigError("field 'numerics.walkers' must be positive");
  if (cfg.bins < 1) throw ConfigError("field 'numerics.bins' must be positive");
  if (cfg.repeats < 1) throw ConfigError("field 'numerics.repeats' must be positive");
  for (long long s : cfg.sweep)
    if (s < 1) throw ConfigError("field 'numerics.sweep' entries must be positive");
  if (cfg.engine != "fp" && cfg.engine != "langevin")
    throw ConfigError("field 'numerics.engine' must be fp or langevin");
  if (cfg.snapshot_every < 1)
    throw ConfigError("field 'numerics.snapshot_every' must be positive");
  if (cfg.init != "boltzmann" && cfg.init != "gaussian" && cfg.init != "equilibrium")
    throw ConfigError("field 'numerics.init' must be boltzmann, gaussian or equilibrium");
  for (double s : cfg.init_sigma)
    if (!(s > 0)) throw ConfigError("field 'numerics.init_sigma' entries must be positive");
  if (cfg.grid_hi != 0.0 || cfg.grid_lo != 0.0) {
    if (!(cfg.grid_hi > cfg.grid_lo))
      throw ConfigError("field 'numerics.grid_hi' must exceed grid_lo");
  }
}

inline Potential build_potential(const ExperimentConfig& cfg) {
  const auto param = [&](const char* name, double fallback) {
    const auto it = cfg.pot_params.find(name);
    return it == cfg.pot_params.end() ? fallback : it->second;
  };
  if (cfg.potential == "harmonic") return Potential::harmonic(param("k", 1.0), param("x0", 0.0));
  if (cfg.potential == "double_well")
    return Potential::double_well(param("a", 1.0), param("b", 2.0), param("c", 0.0));
  return Potential::soft_wall(param("k", 1.0), param("x0", 1.0), param("wall_strength", 4.0));
}

inline ChainModel build_chain(const ExperimentConfig& cfg) {
  const Potential phi = build_potential(cfg);
  const auto kind = cfg.domain == "half_line" ? CoordinateDomain::Kind::HalfLine
                                              : CoordinateDomain::Kind::FullLine;
  CoordinateDomain dom;
  if (cfg.cutoff > 0) {
    dom = CoordinateDomain{kind, cfg.cutoff};
    if (!domain_tail_ok(phi, cfg.kBT, dom))
      throw ConfigError("field 'chain.cutoff': tail mass beyond the cutoff exceeds 1e-12");
  } else {
    dom = auto_domain(phi, cfg.kBT, kind);
  }
  return ChainModel(cfg.n, phi, cfg.kBT, cfg.eta, dom);
}

}  // namespace relent

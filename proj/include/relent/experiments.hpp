#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relent/chain.hpp"
#include "relent/config.hpp"
#include "relent/dynamics.hpp"
#include "relent/equilibrium.hpp"
#include "relent/errors.hpp"
#include "relent/fluctuation.hpp"
#include "relent/io.hpp"
#include "relent/thermo.hpp"

namespace relent {

namespace detail {

inline Grid1D subunit_grid(const ExperimentConfig& cfg, const ChainModel& chain) {
  const bool explicit_grid = cfg.grid_lo != 0.0 || cfg.grid_hi != 0.0;
  const double lo = explicit_grid ? cfg.grid_lo : chain.domain.lower();
  const double hi = explicit_grid ? cfg.grid_hi : chain.domain.upper();
  return Grid1D::uniform(lo, hi, cfg.cells);
}

class SummaryWriter {
 public:
  SummaryWriter(const std::filesystem::path& path, std::uint64_t hash, std::uint64_t seed)
      : csv_(path, hash, seed, "key,value") {}
  void put(const std::string& key, double value) {
    csv_.stream() << key << ',' << fmt17(value) << '\n';
  }
  void put(const std::string& key, const std::string& value) {
    csv_.stream() << key << ',' << value << '\n';
  }

 private:
  CsvFile csv_;
};

inline std::vector<double> broadcast(const std::vector<double>& v, int n, const char* field) {
  if (static_cast<int>(v.size()) == n) return v;
  if (v.size() == 1) return std::vector<double>(static_cast<std::size_t>(n), v[0]);
  throw ConfigError(std::string("field '") + field + "' needs 1 or N entries");
}

}  // namespace detail

/// Equilibrium pipeline: subunit density, end marginal and free energy,
/// exact sampling, and a KS comparison of sampled ends against the marginal.
inline int run_equilibrium(const ExperimentConfig& cfg) {
  const ChainModel chain = build_chain(cfg);
  const std::uint64_t hash = cfg.hash();
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  const Grid1D sub_grid = detail::subunit_grid(cfg, chain);
  const int end_cells = cfg.end_cells > 0 ? cfg.end_cells : cfg.cells;
  const Grid1D end_grid =
      Grid1D::uniform(chain.n * sub_grid.lo, chain.n * sub_grid.hi, end_cells);

  const DensityField sub = subunit_density(chain, sub_grid);
  const DensityField marg = end_marginal(chain, end_grid);
  const ScalarField1D fe = end_free_energy(chain, end_grid);

  write_density_csv(dir / "subunit_density.csv", sub, hash, cfg.seed);
  write_density_csv(dir / "end_marginal.csv", marg, hash, cfg.seed);
  {
    CsvFile csv(dir / "end_free_energy.csv", hash, cfg.seed, "x,free_energy");
    for (int i = 0; i < end_grid.n; ++i) csv.row({end_grid.center(i), fe.v[static_cast<std::size_t>(i)]});
  }

  // exact iid chain samples; first few full configurations are archived
  const ExtensionSampler sampler(chain);
  Rng rng(cfg.seed);
  std::vector<double> ends(static_cast<std::size_t>(cfg.walkers));
  {
    CsvFile csv(dir / "samples.csv", hash, cfg.seed, "sample_id,k,x_k");
    const long long keep = std::min<long long>(cfg.walkers, 200);
    for (long long s = 0; s < cfg.walkers; ++s) {
      const ChainState st = sample_chain(sampler, rng);
      ends[static_cast<std::size_t>(s)] = st.junctions.back();
      if (s < keep)
        for (int k = 0; k < st.n(); ++k)
          csv.row({static_cast<double>(s), static_cast<double>(k + 1), st.junctions[static_cast<std::size_t>(k)]});
    }
  }

  const double ks = ks_statistic(ends, PiecewiseCdf(marg));
  const double ks_crit = 1.63 / std::sqrt(static_cast<double>(cfg.walkers));

  std::size_t dropped = 0;
  const DensityField hist = histogram_density(ends, end_grid, &dropped);
  {
    CsvFile csv(dir / "sampled_end_hist.csv", hash, cfg.seed, "x,sampled_density,exact_density");
    for (int i = 0; i < end_grid.n; ++i) csv.row({end_grid.center(i), hist.at(i), marg.at(i)});
  }

  double smean = 0.0, svar = 0.0;
  for (double x : ends) smean += x;
  smean /= static_cast<double>(ends.size());
  for (double x : ends) svar += (x - smean) * (x - smean);
  svar /= static_cast<double>(ends.size() - 1);
  const Moments sub_m = extension_moments(chain);

  detail::SummaryWriter summary(dir / "summary.csv", hash, cfg.seed);
  summary.put("n", static_cast<double>(chain.n));
  summary.put("lnZ", log_partition_function(chain));
  summary.put("ks_stat", ks);
  summary.put("ks_critical_1pct", ks_crit);
  summary.put("ks_pass", ks < ks_crit ? 1.0 : 0.0);
  summary.put("sample_mean", smean);
  summary.put("sample_var", svar);
  summary.put("marginal_mean", field_mean(marg));
  summary.put("marginal_var", field_variance(marg));
  summary.put("subunit_mean", sub_m.mean);
  summary.put("subunit_var", sub_m.var);
  summary.put("samples_outside_grid", static_cast<double>(dropped));
  if (!cfg.quiet)
    std::cout << "equilibrium: ks=" << ks << " (critical " << ks_crit << "), lnZ="
              << log_partition_function(chain) << "\n";
  return 0;
}

/// Fluctuation pipeline: per-sample relative entropies and free energies of
/// the empirical measure, plus the exact-vs-Stirling sweep over chain sizes.
inline int run_fluctuation(const ExperimentConfig& cfg) {
  const ChainModel chain = build_chain(cfg);
  const std::uint64_t hash = cfg.hash();
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  const BinGrid bins = BinGrid::uniform(chain.domain.lower(), chain.domain.upper(), cfg.bins);
  const ProbVector p = bin_probabilities(chain, bins);
  const ExtensionSampler sampler(chain);
  Rng rng(cfg.seed);

  double mean_h = 0.0;
  EmpiricalMeasure last{bins, std::vector<double>(static_cast<std::size_t>(bins.m()), 0.0), chain.n};
  {
    CsvFile csv(dir / "per_sample.csv", hash, cfg.seed, "sample_id,rel_entropy,delta_f");
    for (int r = 0; r < cfg.repeats; ++r) {
      const ChainState st = sample_chain(sampler, rng);
      last = empirical_measure(st, bins);
      const double h = relative_entropy(last.prob_vector(), p);
      csv.row({static_cast<double>(r), h, fluctuation_free_energy(last, p, chain.kBT)});
      mean_h += h;
    }
    mean_h /= cfg.repeats;
  }
  {
    CsvFile csv(dir / "empirical.csv", hash, cfg.seed, "bin_lo,bin_hi,nu");
    for (int i = 0; i < bins.m(); ++i)
      csv.row({bins.g.edge(i), bins.g.edge(i + 1), last.nu[static_cast<std::size_t>(i)]});
  }

  // Stirling-convergence sweep at one fixed (tilted) composition: the
  // per-subunit gap then shows the pure O(m ln N / N) Stirling error
  bool decreasing = true;
  {
    CsvFile csv(dir / "sanov_sweep.csv", hash, cfg.seed, "N,exact,stirling,gap");
    const ProbVector nu_star = sweep_composition(p);
    double prev = std::numeric_limits<double>::infinity();
    for (long long nn : cfg.sweep) {
      const EmpiricalMeasure mu = scale_composition(bins, nu_star, nn);
      const SanovGap gap = sanov_gap(mu, p, chain.kBT);
      csv.row({static_cast<double>(nn), gap.exact, gap.stirling, gap.gap});
      const double per = std::abs(gap.gap) / static_cast<double>(nn);
      if (per >= prev) decreasing = false;
      prev = per;
    }
  }

  detail::SummaryWriter summary(dir / "summary.csv", hash, cfg.seed);
  summary.put("mean_rel_entropy", mean_h);
  summary.put("chi2_heuristic", (bins.m() - 1) / (2.0 * chain.n));
  summary.put("gap_per_subunit_decreasing", decreasing ? 1.0 : 0.0);
  if (!cfg.quiet)
    std::cout << "fluctuation: mean H=" << mean_h << " over " << cfg.repeats
              << " repeats; (m-1)/2N=" << (bins.m() - 1) / (2.0 * chain.n) << "\n";
  return 0;
}

namespace detail {

/// Psi monotonicity verdict at per-step resolution (FP engine).
inline bool psi_monotone(const std::vector<double>& psi, double rel_slack = 1e-10) {
  for (std::size_t i = 1; i < psi.size(); ++i)
    if (psi[i] > psi[i - 1] + rel_slack * std::abs(psi[i - 1])) return false;
  return true;
}

}  // namespace detail

/// Relaxation pipeline: evolves an initial density (FP engine, N <= 2) or an
/// ensemble (Langevin engine, any N), streaming thermodynamic instrumentation,
/// scalar observables and density snapshots, and reporting a PASS/FAIL
/// Psi-monotonicity verdict. Solver construction (and with it the stability
/// check) happens before any output file is created.
inline int run_relax(const ExperimentConfig& cfg) {
  const ChainModel chain = build_chain(cfg);
  const std::uint64_t hash = cfg.hash();
  const std::filesystem::path dir(cfg.output_dir);
  std::string verdict = "PASS";
  double final_rel = std::numeric_limits<double>::quiet_NaN();
  long long steps = 0;

  if (cfg.engine == "fp") {
    if (chain.n > 2)
      throw ConfigError("field 'numerics.engine': fp engine supports N <= 2 only");

    // build grid + solver + initial state first: StabilityViolation must
    // surface before anything is written
    const Grid1D axis = detail::subunit_grid(cfg, chain);
    std::optional<FokkerPlanck1D> solver1;
    std::optional<FokkerPlanck2D> solver2;
    DensityField p;
    if (chain.n == 1) {
      solver1.emplace(chain, FPSolverConfig::make_1d(chain, cfg.dt, axis));
      p = cfg.init == "boltzmann"
              ? solver1->boltzmann()
              : gaussian_field(axis, cfg.init_mean.at(0), cfg.init_sigma.at(0));
    } else {
      const Grid2D grid{axis, axis};
      solver2.emplace(chain, FPSolverConfig::make_2d(chain, cfg.dt, grid));
      const auto mean = detail::broadcast(cfg.init_mean, 2, "numerics.init_mean");
      const auto sigma = detail::broadcast(cfg.init_sigma, 2, "numerics.init_sigma");
      p = cfg.init == "boltzmann" ? solver2->boltzmann()
                                  : gaussian_field(grid, mean[0], sigma[0], mean[1], sigma[1]);
    }

    std::filesystem::create_directories(dir);
    CsvFile thermo_csv(dir / "thermo.csv", hash, cfg.seed,
                       "t,psi,psi_eq,rel_entropy,dissipation,ep_rate,cos_angle");
    CsvFile obs_csv(dir / "observables.csv", hash, cfg.seed, "t,observable_name,value");
    CsvFile snap_csv(dir / "snapshots.csv", hash, cfg.seed,
                     chain.n == 1 ? "t,x,density" : "t,x,y,density");
    std::vector<double> psi_series;
    const auto emit = [&](double t, const DensityField& q, const std::vector<double>& dpdt) {
      const ThermoReport r = make_thermo_report(t, q, chain, &dpdt);
      thermo_csv.row({r.t, r.psi, r.psi_eq, r.rel_entropy, r.dissipation, r.ep_rate, r.cos_angle});
      final_rel = r.rel_entropy;
      const auto obs = [&](const char* name, double v) {
        obs_csv.stream() << fmt17(t) << ',' << name << ',' << fmt17(v) << '\n';
      };
      obs("mass", q.mass());
      if (q.dim == 1) {
        obs("mean", field_mean(q));
        obs("variance", field_variance(q));
      } else {
        double m1 = 0.0, m2 = 0.0, v1 = 0.0, v2 = 0.0;
        const double vol = q.cell_volume();
        for (int i = 0; i < q.gx.n; ++i)
          for (int j = 0; j < q.gy.n; ++j) {
            m1 += q.gx.center(i) * q.at(i, j) * vol;
            m2 += q.gy.center(j) * q.at(i, j) * vol;
          }
        for (int i = 0; i < q.gx.n; ++i)
          for (int j = 0; j < q.gy.n; ++j) {
            v1 += (q.gx.center(i) - m1) * (q.gx.center(i) - m1) * q.at(i, j) * vol;
            v2 += (q.gy.center(j) - m2) * (q.gy.center(j) - m2) * q.at(i, j) * vol;
          }
        obs("mean_z1", m1);
        obs("mean_z2", m2);
        obs("variance_z1", v1);
        obs("variance_z2", v2);
      }
    };
    const auto snapshot = [&](double t, const DensityField& q) {
      if (q.dim == 1)
        for (int i = 0; i < q.gx.n; ++i) snap_csv.row({t, q.gx.center(i), q.at(i)});
      else
        for (int i = 0; i < q.gx.n; ++i)
          for (int j = 0; j < q.gy.n; ++j)
            snap_csv.row({t, q.gx.center(i), q.gy.center(j), q.at(i, j)});
    };

    steps = cfg.t_final > 0
                ? static_cast<long long>(std::ceil(cfg.t_final / cfg.dt - 1e-12))
                : 0;
    const long long snap_stride = std::max<long long>(1, steps / 10);

    const auto drive = [&](auto& solver) {
      psi_series.reserve(static_cast<std::size_t>(steps) + 1);
      psi_series.push_back(psi_functional(p, chain));
      emit(0.0, p, solver.time_derivative(p));
      snapshot(0.0, p);
      for (long long s = 1; s <= steps; ++s) {
        solver.step(p);
        psi_series.push_back(psi_functional(p, chain));
        const double t = static_cast<double>(s) * cfg.dt;
        if (s % cfg.snapshot_every == 0 || s == steps) emit(t, p, solver.time_derivative(p));
        if (s % snap_stride == 0 || s == steps) snapshot(t, p);
      }
    };
    if (solver1) drive(*solver1);
    else drive(*solver2);
    verdict = detail::psi_monotone(psi_series) ? "PASS" : "FAIL";
  } else {
    // Langevin engine
    const auto mean = detail::broadcast(cfg.init_mean, chain.n, "numerics.init_mean");
    const auto sigma = detail::broadcast(cfg.init_sigma, chain.n, "numerics.init_sigma");
    Ensemble ens =
        cfg.init == "equilibrium"
            ? sample_equilibrium_ensemble(chain, static_cast<std::size_t>(cfg.walkers), cfg.seed)
            : gaussian_extension_ensemble(chain, mean, sigma,
                                          static_cast<std::size_t>(cfg.walkers), cfg.seed);

    std::filesystem::create_directories(dir);
    CsvFile thermo_csv(dir / "thermo.csv", hash, cfg.seed,
                       "t,psi,psi_eq,rel_entropy,dissipation,ep_rate,cos_angle");
    CsvFile obs_csv(dir / "observables.csv", hash, cfg.seed, "t,observable_name,value");
    CsvFile snap_csv(dir / "snapshots.csv", hash, cfg.seed, "t,x,density");
    CsvFile se_csv(dir / "psi_stderr.csv", hash, cfg.seed, "t,psi_se");
    steps = cfg.t_final > 0 ? static_cast<long long>(std::ceil(cfg.t_final / cfg.dt - 1e-12)) : 0;
    std::vector<double> psi_series, se_series;
    const Grid1D pool_grid = detail::subunit_grid(cfg, chain);

    const auto observe = [&](double t) {
      double psi = std::numeric_limits<double>::quiet_NaN();
      double se = std::numeric_limits<double>::quiet_NaN();
      double rel = std::numeric_limits<double>::quiet_NaN();
      if (chain.n <= 2) {
        const PsiEstimate est = psi_ensemble_estimate(ens, chain);
        psi = est.value;
        se = est.stderr_boot;
        rel = psi_decomposition(est.histogram, chain).rel;
        psi_series.push_back(psi);
        se_series.push_back(se);
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      thermo_csv.row({t, psi, nan, rel, nan, nan, nan});
      se_csv.row({t, se});
      final_rel = rel;
      // pooled extension statistics + histogram snapshot
      std::vector<double> z;
      z.reserve(ens.walkers() * static_cast<std::size_t>(chain.n));
      for (std::size_t w = 0; w < ens.walkers(); ++w) {
        double prev = 0.0;
        const double* x = ens.walker(w);
        for (int k = 0; k < chain.n; ++k) {
          z.push_back(x[k] - prev);
          prev = x[k];
        }
      }
      double zm = 0.0, zv = 0.0;
      for (double v : z) zm += v;
      zm /= static_cast<double>(z.size());
      for (double v : z) zv += (v - zm) * (v - zm);
      zv /= static_cast<double>(z.size());
      const auto obs = [&](const char* name, double v) {
        obs_csv.stream() << fmt17(t) << ',' << name << ',' << fmt17(v) << '\n';
      };
      obs("extension_mean", zm);
      obs("extension_variance", zv);
      std::size_t dropped = 0;
      const DensityField hist = histogram_density(z, pool_grid, &dropped);
      for (int i = 0; i < pool_grid.n; ++i) snap_csv.row({t, pool_grid.center(i), hist.at(i)});
    };

    observe(0.0);
    for (long long s = 1; s <= steps; ++s) {
      langevin_step(ens, chain, cfg.dt);
      if (s % cfg.snapshot_every == 0 || s == steps) observe(ens.time);
    }
    if (chain.n <= 2) {
      bool ok = true;
      for (std::size_t i = 1; i < psi_series.size(); ++i)
        if (psi_series[i] >
            psi_series[i - 1] + 3.0 * (se_series[i] + se_series[i - 1]) + 1e-10)
          ok = false;
      verdict = ok ? "PASS" : "FAIL";
    } else {
      verdict = "NA";
    }
  }

  detail::SummaryWriter summary(dir / "summary.csv", hash, cfg.seed);
  summary.put("verdict", verdict);
  summary.put("steps", static_cast<double>(steps));
  summary.put("final_rel_entropy", final_rel);
  if (!cfg.quiet) std::cout << "relax: psi monotonicity verdict " << verdict << "\n";
  return verdict == "FAIL" ? 1 : 0;
}

// ---------------------------------------------------------------------------
// validation suite
// ---------------------------------------------------------------------------

struct ValidationCheck {
  std::string name;
  bool pass;
  double value;
  std::string note;
};

/// Desk-scale run of every library invariant; the shipped defaults must pass.
inline std::vector<ValidationCheck> validation_suite(std::uint64_t seed) {
  std::vector<ValidationCheck> out;
  const auto check = [&](const std::string& name, bool pass, double value,
                         const std::string& note = "") {
    out.push_back({name, pass, value, note});
  };
  Rng rng(seed ^ 0xC0FFEE);

  const CoordinateDomain full{CoordinateDomain::Kind::FullLine, 10.0};
  const Potential harm = Potential::harmonic(1.0, 0.0);

  // potential: analytic gradient vs central finite differences
  {
    const Potential pots[3] = {harm, Potential::double_well(1.0, 2.0, 0.25),
                               Potential::soft_wall(2.0, 1.0, 4.0)};
    double worst = 0.0;
    for (const auto& p : pots) {
      for (int i = 0; i < 100; ++i) {
        const double x = -4.0 + 9.0 * rng.uniform01();
        const double step = 1e-5 * std::max(1.0, p.scale());
        const double fd = (p.value(x + step) - p.value(x - step)) / (2.0 * step);
        const double g = p.grad(x);
        const double denom = std::max({std::abs(g), std::abs(fd), 1e-6});
        worst = std::max(worst, std::abs(g - fd) / denom);
      }
    }
    check("potential.gradient_matches_fd", worst < 1e-6, worst);
  }
  // potential: partition monotone in kBT, translation invariant on full line
  {
    const double z1 = subunit_partition(harm, 1.0, full);
    const double z2 = subunit_partition(harm, 2.0, full);
    const double z4 = subunit_partition(harm, 4.0, full);
    check("potential.partition_monotone_kBT", z1 < z2 && z2 < z4, z4 / z1);
    const Potential shifted = Potential::harmonic(1.0, 1.5);
    const CoordinateDomain wide{CoordinateDomain::Kind::FullLine, 12.0};
    const double za = subunit_partition(harm, 1.0, wide);
    const double zb = subunit_partition(shifted, 1.0, wide);
    check("potential.partition_translation_invariant", std::abs(za - zb) < 1e-9 * za,
          std::abs(za - zb) / za);
  }
  // potential: confinement at the auto cutoff
  {
    bool ok = true;
    double min_gap = 1e300;
    const Potential pots[3] = {harm, Potential::double_well(1.0, 2.0, 0.0),
                               Potential::soft_wall(1.0, 1.0, 4.0)};
    for (const auto& p : pots) {
      const CoordinateDomain d = auto_domain(p, 1.0, CoordinateDomain::Kind::HalfLine);
      const double gap = p.value(d.upper()) - p.value(p.rightmost_min());
      min_gap = std::min(min_gap, gap);
      if (gap <= 10.0) ok = false;
      if (!domain_tail_ok(p, 1.0, d)) ok = false;
    }
    check("potential.confining_and_tail_bounded", ok, min_gap);
  }
  // equilibrium: end marginal of harmonic chain is the analytic Gaussian
  {
    const ChainModel chain(4, harm, 1.0, 1.0, full);
    const Grid1D grid = Grid1D::uniform(-4 * full.cutoff, 4 * full.cutoff, 2048);
    const DensityField m = end_marginal(chain, grid);
    const DensityField exact = gaussian_field(grid, 0.0, 2.0);  // N(0, N kBT/k)
    double worst = 0.0;
    for (int q = 0; q < 10; ++q) {
      const double x = -6.0 + 12.0 * (q + 0.5) / 10.0;
      const int i = grid.locate(x);
      worst = std::max(worst, std::abs(m.at(i) - exact.at(i)));
    }
    check("equilibrium.end_marginal_gaussian", worst < 1e-5, worst);
    const Moments mom = extension_moments(chain);
    check("equilibrium.end_marginal_mean_additivity",
          std::abs(field_mean(m) - 4 * mom.mean) < 1e-8, field_mean(m) - 4 * mom.mean);
  }
  // equilibrium: exp(joint_log_density) integrates to one (N = 1, 2)
  {
    const ChainModel c1(1, harm, 1.0, 1.0, full);
    const Grid1D g = Grid1D::uniform(-10.0, 10.0, 512);
    double s1 = 0.0;
    for (int i = 0; i < g.n; ++i) {
      ChainState st;
      st.junctions = {g.center(i)};
      s1 += std::exp(joint_log_density(c1, st)) * g.h();
    }
    check("equilibrium.joint_density_normalized_n1", std::abs(s1 - 1.0) < 1e-6, s1);
    const ChainModel c2(2, harm, 1.0, 1.0, full);
    const Grid1D g2 = Grid1D::uniform(-10.0, 10.0, 256);
    double s2 = 0.0;
    for (int i = 0; i < g2.n; ++i)
      for (int j = 0; j < g2.n; ++j) {
        ChainState st;
        st.junctions = {g2.center(i), g2.center(i) + g2.center(j)};
        s2 += std::exp(joint_log_density(c2, st)) * g2.h() * g2.h();
      }
    check("equilibrium.joint_density_normalized_n2", std::abs(s2 - 1.0) < 1e-6, s2);
  }
  // equilibrium: sampler histogram vs density (chi-squared, 50 bins, 1%)
  {
    const ChainModel chain(1, Potential::soft_wall(4.0, 1.0, 4.0), 1.0, 1.0,
                           auto_domain(Potential::soft_wall(4.0, 1.0, 4.0), 1.0,
                                       CoordinateDomain::Kind::HalfLine));
    const ExtensionSampler sampler(chain);
    const int nbins = 50, nsamp = 20000;
    std::vector<double> edges(static_cast<std::size_t>(nbins) + 1);
    for (int b = 0; b <= nbins; ++b)
      edges[static_cast<std::size_t>(b)] = sampler.quantile(static_cast<double>(b) / nbins);
    std::vector<double> expected(static_cast<std::size_t>(nbins));
    const double z = subunit_partition(chain.phi, chain.kBT, chain.domain);
    for (int b = 0; b < nbins; ++b)
      expected[static_cast<std::size_t>(b)] =
          integrate([&](double x) { return std::exp(-chain.phi.value(x) / chain.kBT); },
                    edges[static_cast<std::size_t>(b)], edges[static_cast<std::size_t>(b) + 1],
                    1e-10, 1e-300)
              .value /
          z * nsamp;
    std::vector<double> observed(static_cast<std::size_t>(nbins), 0.0);
    Rng r2(seed ^ 0x51AB);
    for (int s = 0; s < nsamp; ++s) {
      const double x = sampler.draw(r2);
      int b = static_cast<int>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin()) - 1;
      b = std::clamp(b, 0, nbins - 1);
      observed[static_cast<std::size_t>(b)] += 1.0;
    }
    double chi2 = 0.0;
    for (int b = 0; b < nbins; ++b) {
      const double e = expected[static_cast<std::size_t>(b)];
      const double o = observed[static_cast<std::size_t>(b)];
      chi2 += (o - e) * (o - e) / e;
    }
    check("equilibrium.sampler_chi2_1pct", chi2 < 74.919, chi2, "df=49 critical 74.919");
  }
  // fluctuation: relative entropy positivity / zero iff equal / convexity
  {
    bool ok = true;
    double min_h = 1e300;
    for (int t = 0; t < 100; ++t) {
      std::vector<double> a(6), b(6);
      for (int i = 0; i < 6; ++i) {
        a[static_cast<std::size_t>(i)] = rng.uniform01() + 1e-3;
        b[static_cast<std::size_t>(i)] = rng.uniform01() + 1e-3;
      }
      const ProbVector pa = ProbVector::normalized(a), pb = ProbVector::normalized(b);
      const double h = relative_entropy(pa, pb);
      min_h = std::min(min_h, h);
      if (h < 0) ok = false;
      if (relative_entropy(pa, pa) != 0.0) ok = false;
    }
    check("fluctuation.rel_entropy_nonnegative", ok && min_h >= 0, min_h);
    bool convex = true;
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      std::vector<double> a(5), b(5), c(5);
      for (int i = 0; i < 5; ++i) {
        a[static_cast<std::size_t>(i)] = rng.uniform01() + 1e-3;
        b[static_cast<std::size_t>(i)] = rng.uniform01() + 1e-3;
        c[static_cast<std::size_t>(i)] = rng.uniform01() + 1e-3;
      }
      const ProbVector p1 = ProbVector::normalized(a), p2 = ProbVector::normalized(b),
                       q = ProbVector::normalized(c);
      for (double lam : {0.25, 0.5, 0.75}) {
        std::vector<double> mixv(5);
        for (int i = 0; i < 5; ++i)
          mixv[static_cast<std::size_t>(i)] = lam * p1.p[static_cast<std::size_t>(i)] +
                                              (1 - lam) * p2.p[static_cast<std::size_t>(i)];
        const double lhs = relative_entropy(ProbVector::normalized(mixv), q);
        const double rhs = lam * relative_entropy(p1, q) + (1 - lam) * relative_entropy(p2, q);
        worst = std::max(worst, lhs - rhs);
        if (lhs > rhs + 1e-12) convex = false;
      }
    }
    check("fluctuation.rel_entropy_convex", convex, worst);
  }
  // fluctuation: multinomial probabilities sum to one (brute force)
  {
    double worst = 0.0;
    for (int n = 1; n <= 6; ++n)
      for (int m = 2; m <= 4; ++m) {
        std::vector<double> pv(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) pv[static_cast<std::size_t>(i)] = i + 1.0;
        const ProbVector p = ProbVector::normalized(pv);
        double total = 0.0;
        std::vector<long long> counts(static_cast<std::size_t>(m), 0);
        const std::function<void(int, int)> rec = [&](int cell, int left) {
          if (cell == m - 1) {
            counts[static_cast<std::size_t>(cell)] = left;
            EmpiricalMeasure mu{BinGrid::uniform(0, 1, m),
                                std::vector<double>(static_cast<std::size_t>(m)), n};
            for (int i = 0; i < m; ++i)
              mu.nu[static_cast<std::size_t>(i)] =
                  static_cast<double>(counts[static_cast<std::size_t>(i)]) / n;
            total += std::exp(multinomial_log_prob(mu, p));
            return;
          }
          for (int k = 0; k <= left; ++k) {
            counts[static_cast<std::size_t>(cell)] = k;
            rec(cell + 1, left - k);
          }
        };
        rec(0, n);
        worst = std::max(worst, std::abs(total - 1.0));
      }
    check("fluctuation.multinomial_sums_to_one", worst < 1e-12, worst);
  }
  // fluctuation: per-subunit Sanov gap shrinks with N at fixed composition
  {
    const ChainModel base(1, Potential::harmonic(4.0, 1.0), 1.0, 1.0,
                          auto_domain(Potential::harmonic(4.0, 1.0), 1.0,
                                      CoordinateDomain::Kind::HalfLine));
    const BinGrid bins = BinGrid::uniform(base.domain.lower(), base.domain.upper(), 8);
    const ProbVector p = bin_probabilities(base, bins);
    const ProbVector nu_star = sweep_composition(p);
    double prev = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (long long nn : {100LL, 1000LL, 10000LL}) {
      const EmpiricalMeasure mu = scale_composition(bins, nu_star, nn);
      const double per = std::abs(sanov_gap(mu, p, base.kBT).gap) / static_cast<double>(nn);
      if (per >= prev) decreasing = false;
      prev = per;
    }
    check("fluctuation.sanov_gap_per_subunit_decreasing", decreasing, prev);
  }
  // fluctuation: Gibbs entropy bounded by ln m
  {
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      std::vector<double> a(8);
      for (auto& x : a) x = rng.uniform01() + 1e-6;
      if (gibbs_entropy(ProbVector::normalized(a)) > std::log(8.0) + 1e-12) ok = false;
    }
    const double uniform_gap =
        std::abs(gibbs_entropy(ProbVector(std::vector<double>(8, 0.125))) - std::log(8.0));
    check("fluctuation.gibbs_entropy_bounded", ok && uniform_gap < 1e-12, uniform_gap);
  }
  // dynamics: mass conservation, positivity, Boltzmann stationarity, flux zero
  {
    const Potential dw = Potential::double_well(1.0, 2.0, 0.0);
    const CoordinateDomain dom = auto_domain(dw, 1.0, CoordinateDomain::Kind::FullLine);
    const ChainModel chain(1, dw, 1.0, 1.0, dom);
    const Grid1D grid = Grid1D::uniform(dom.lower(), dom.upper(), 256);
    const double dt = 0.35 * grid.h() * grid.h();
    const FokkerPlanck1D solver(chain, FPSolverConfig::make_1d(chain, dt, grid));
    DensityField p = gaussian_field(grid, 1.0, 0.4);
    double min_val = 1e300, max_mass_err = 0.0;
    for (int s = 0; s < 1000; ++s) {
      solver.step(p);
      max_mass_err = std::max(max_mass_err, std::abs(p.mass() - 1.0));
      for (double v : p.v) min_val = std::min(min_val, v);
    }
    check("dynamics.fp_mass_conserved", max_mass_err < 1e-12, max_mass_err);
    check("dynamics.fp_nonnegative", min_val >= 0.0, min_val);
    DensityField boltz = solver.boltzmann();
    const DensityField b0 = boltz;
    for (int s = 0; s < 10000; ++s) solver.step(boltz);
    const double drift = l1_distance(boltz, b0);
    check("dynamics.boltzmann_stationary", drift < 1e-6, drift);
    const VectorField jb = flux_field(b0, chain);
    const VectorField jt = flux_field(p, chain);
    double max_jb = 0.0, max_jt = 0.0;
    for (std::size_t i = 0; i < jb.c1.size(); ++i) max_jb = std::max(max_jb, std::abs(jb.c1[i]));
    for (std::size_t i = 0; i < jt.c1.size(); ++i) max_jt = std::max(max_jt, std::abs(jt.c1[i]));
    check("dynamics.flux_vanishes_at_boltzmann", max_jb < 1e-8 * max_jt, max_jb / max_jt);
  }
  // dynamics: chain force is minus the potential gradient (finite differences)
  {
    const ChainModel chain(5, harm, 1.0, 1.0, full);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      ChainState st;
      st.junctions.resize(5);
      double acc = 0.0;
      for (auto& x : st.junctions) {
        acc += -1.0 + 2.0 * rng.uniform01();
        x = acc;
      }
      const auto f = chain_force(chain, st);
      for (int k = 0; k < 5; ++k) {
        const double h = 1e-6;
        ChainState up = st, dn = st;
        up.junctions[static_cast<std::size_t>(k)] += h;
        dn.junctions[static_cast<std::size_t>(k)] -= h;
        const double fd =
            -(chain_potential(chain, up) - chain_potential(chain, dn)) / (2.0 * h);
        worst = std::max(worst,
                         std::abs(f[static_cast<std::size_t>(k)] - fd) /
                             std::max(1.0, std::abs(fd)));
      }
    }
    check("dynamics.chain_force_matches_fd", worst < 1e-6, worst);
  }
  // thermo: H-theorem, decomposition identity, flux-force identity, dissipation sign
  {
    const ChainModel chain(1, harm, 1.0, 1.0, full);
    const Grid1D grid = Grid1D::uniform(-8.0, 8.0, 256);
    const double dt = 0.35 * grid.h() * grid.h();
    const FokkerPlanck1D solver(chain, FPSolverConfig::make_1d(chain, dt, grid));
    DensityField p = gaussian_field(grid, 2.0, 0.5);
    double prev_psi = psi_functional(p, chain);
    double prev_rel = psi_decomposition(p, chain).rel;
    bool monotone = true, rel_monotone = true;
    for (int s = 0; s < 2000; ++s) {
      solver.step(p);
      const double psi = psi_functional(p, chain);
      if (psi > prev_psi + 1e-10 * std::abs(prev_psi)) monotone = false;
      const double rel = psi_decomposition(p, chain).rel;
      if (rel > prev_rel + 1e-10 * std::max(1.0, std::abs(prev_rel))) rel_monotone = false;
      prev_psi = psi;
      prev_rel = rel;
    }
    check("thermo.h_theorem_psi_monotone", monotone, prev_psi);
    check("thermo.rel_entropy_monotone", rel_monotone, prev_rel);

    double worst_id = 0.0;
    Rng r4(seed ^ 0x77);
    for (int t = 0; t < 50; ++t) {
      DensityField q = DensityField::zeros(grid);
      for (auto& v : q.v) v = 0.05 + rng.uniform01();
      q.normalize();
      const double psi = psi_functional(q, chain);
      const PsiParts parts = psi_decomposition(q, chain);
      worst_id = std::max(worst_id,
                          std::abs(psi - (parts.psi_eq + chain.kBT * parts.rel)) /
                              std::max(1.0, std::abs(psi)));
      const DissipationRate d = dissipation_rate(q, chain);
      if (d.dpsi_dt > 0) worst_id = 1e9;
    }
    check("thermo.decomposition_identity", worst_id < 1e-8, worst_id);

    const VectorField phi = force_field(p, chain);
    const VectorField j = flux_field(p, chain);
    double worst_jf = 0.0, max_j = 0.0;
    for (std::size_t i = 0; i < j.c1.size(); ++i) {
      max_j = std::max(max_j, std::abs(j.c1[i]));
      worst_jf = std::max(worst_jf, std::abs(j.c1[i] - p.v[i] * phi.c1[i] / chain.eta));
    }
    check("thermo.flux_equals_p_phi_over_eta", worst_jf < 1e-10 * std::max(1.0, max_j),
          worst_jf);
    (void)r4;
  }
  // dynamics: Langevin OU variance against the analytic law
  {
    const ChainModel chain(1, harm, 1.0, 1.0, full);
    Ensemble ens = Ensemble::zeros(1, 20000, seed ^ 0xD1CE);
    const double dt = 1e-3, t_final = 0.5;
    const long long n_steps = static_cast<long long>(t_final / dt);
    for (long long s = 0; s < n_steps; ++s) langevin_step(ens, chain, dt);
    double var = 0.0;
    for (std::size_t w = 0; w < ens.walkers(); ++w) var += ens.coords[w] * ens.coords[w];
    var /= static_cast<double>(ens.walkers());
    const double exact = 1.0 - std::exp(-2.0 * t_final);
    const double se = exact * std::sqrt(2.0 / static_cast<double>(ens.walkers() - 1));
    check("dynamics.langevin_ou_variance", std::abs(var - exact) < 4.0 * se + 2e-3 * exact,
          (var - exact) / exact, "4 standard errors");
  }
  // dynamics: half-line reflection keeps extensions non-negative
  {
    const Potential sw = Potential::soft_wall(4.0, 1.0, 4.0);
    const ChainModel chain(3, sw, 1.0, 1.0,
                           auto_domain(sw, 1.0, CoordinateDomain::Kind::HalfLine));
    Ensemble ens = gaussian_extension_ensemble(chain, {1.0, 1.0, 1.0}, {0.3, 0.3, 0.3}, 500,
                                               seed ^ 0xF00D);
    bool ok = true;
    for (int s = 0; s < 400; ++s) {
      langevin_step(ens, chain, 1e-3);
      for (std::size_t w = 0; w < ens.walkers() && ok; ++w) {
        double prev = 0.0;
        for (int k = 0; k < 3; ++k) {
          if (ens.walker(w)[k] - prev < 0) ok = false;
          prev = ens.walker(w)[k];
        }
      }
    }
    check("dynamics.half_line_extensions_nonnegative", ok, ok ? 1.0 : 0.0);
  }
  return out;
}

/// Runs the invariant suite, prints one line per check, exit 0 iff all pass.
inline int run_validate(const ExperimentConfig& cfg) {
  const auto checks = validation_suite(cfg.seed);
  bool all = true;
  std::size_t width = 0;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  for (const auto& c : checks) {
    all = all && c.pass;
    if (!cfg.quiet || !c.pass) {
      std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name
                << std::string(width - c.name.size() + 2, ' ') << fmt17(c.value);
      if (!c.note.empty()) std::cout << "  (" << c.note << ")";
      std::cout << "\n";
    }
  }
  std::cout << (all ? "validate: all checks passed" : "validate: FAILURES present") << "\n";
  return all ? 0 : 1;
}

}  // namespace relent

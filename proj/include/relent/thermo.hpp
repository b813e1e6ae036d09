#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "relent/chain.hpp"
#include "relent/dynamics.hpp"
#include "relent/errors.hpp"
#include "relent/grid.hpp"
#include "relent/rng.hpp"

namespace relent {

/// Chain potential evaluated at cell centers of a density's grid.
/// dim 1 requires N = 1 (U(x) = phi(x)); dim 2 requires N = 2 in extension
/// coordinates (U(z) = phi(z1) + phi(z2)).
inline std::vector<double> potential_on_grid(const ChainModel& chain, const DensityField& p) {
  std::vector<double> u(p.v.size());
  if (p.dim == 1) {
    if (chain.n != 1) throw ConfigError("potential_on_grid: 1-D density requires N = 1");
    for (int i = 0; i < p.gx.n; ++i)
      u[static_cast<std::size_t>(i)] = chain.phi.value(p.gx.center(i));
  } else {
    if (chain.n != 2) throw ConfigError("potential_on_grid: 2-D density requires N = 2");
    for (int i = 0; i < p.gx.n; ++i)
      for (int j = 0; j < p.gy.n; ++j)
        u[static_cast<std::size_t>(i) * p.gy.n + j] =
            chain.phi.value(p.gx.center(i)) + chain.phi.value(p.gy.center(j));
  }
  return u;
}

/// Psi[P] = sum (U P + kBT P ln P) vol, the free-energy functional of a
/// nonequilibrium density (P ln P = 0 where P = 0).
inline double psi_functional(const DensityField& p, const ChainModel& chain) {
  chain.require_positive_temperature("psi_functional");
  const auto u = potential_on_grid(chain, p);
  const double vol = p.cell_volume();
  double s = 0.0;
  for (std::size_t c = 0; c < p.v.size(); ++c) {
    const double pc = p.v[c];
    if (pc > 0) s += u[c] * pc + chain.kBT * pc * std::log(pc);
  }
  return s * vol;
}

struct PsiParts {
  double psi_eq;  // -kBT ln Z restricted to the grid quadrature
  double rel;     // relative entropy H[P | P_eq] in nats
};

/// Splits Psi into the equilibrium free energy and kBT-weighted relative
/// entropy: psi = psi_eq + kBT * rel holds to rounding because both terms use
/// the same cell-center quadrature.
inline PsiParts psi_decomposition(const DensityField& p, const ChainModel& chain) {
  chain.require_positive_temperature("psi_decomposition");
  const auto u = potential_on_grid(chain, p);
  const double vol = p.cell_volume();
  double zgrid = 0.0;
  for (const double ui : u) zgrid += std::exp(-ui / chain.kBT);
  zgrid *= vol;
  const double log_zgrid = std::log(zgrid);
  double rel = 0.0;
  for (std::size_t c = 0; c < p.v.size(); ++c) {
    const double pc = p.v[c];
    if (pc <= 0) continue;
    const double log_peq = -u[c] / chain.kBT - log_zgrid;
    if (log_peq < -745.0)
      throw AbsoluteContinuityViolation("psi_decomposition: P > 0 where P_eq underflows (cell " +
                                        std::to_string(c) + ")");
    rel += pc * (std::log(pc) - log_peq);
  }
  return {-chain.kBT * log_zgrid, rel * vol};
}

/// Vector field over a density grid (one component per dimension).
struct VectorField {
  int dim = 1;
  Grid1D gx, gy;
  std::vector<double> c1, c2;  // c2 unused when dim == 1
};

namespace detail {

/// Cells below this density carry no usable log-gradient information.
constexpr double kSupportFloor = 1e-300;

/// Differencing pattern by neighbor availability: 2 central, 1 forward,
/// -1 backward, 0 empty cell (zero force), -2 isolated positive cell (error).
/// The same pattern is applied to ln P and to U so the force still vanishes
/// identically on the discrete Boltzmann state.
inline int slope_pattern(bool self_ok, bool minus_ok, bool plus_ok) {
  if (!self_ok) return 0;
  if (minus_ok && plus_ok) return 2;
  if (plus_ok) return 1;
  if (minus_ok) return -1;
  return -2;
}

inline double apply_slope(int pattern, double fm, double f0, double fp, double h) {
  switch (pattern) {
    case 2:
      return (fp - fm) / (2.0 * h);
    case 1:
      return (fp - f0) / h;
    case -1:
      return (f0 - fm) / h;
    default:
      return 0.0;
  }
}

}  // namespace detail

/// Thermodynamic force Phi = -kBT grad ln P - grad U, with both gradients
/// taken by the same differencing (central inside, one-sided at walls and
/// next to empty cells) so Phi vanishes identically at the discrete Boltzmann
/// state. Cells with no mass get Phi = 0; a positive cell surrounded by empty
/// neighbors is a genuine interior hole and raises ZeroDensityInterior.
inline VectorField force_field(const DensityField& p, const ChainModel& chain) {
  chain.require_positive_temperature("force_field");
  const auto u = potential_on_grid(chain, p);
  VectorField f;
  f.dim = p.dim;
  f.gx = p.gx;
  f.gy = p.gy;
  f.c1.assign(p.v.size(), 0.0);
  if (p.dim == 2) f.c2.assign(p.v.size(), 0.0);

  const auto ok = [&](double v) { return v > detail::kSupportFloor; };
  const auto component = [&](std::size_t c, double pm, double p0, double pp, double um,
                             double u0, double up, double h, bool has_m, bool has_p) {
    const int pat = detail::slope_pattern(ok(p0), has_m && ok(pm), has_p && ok(pp));
    if (pat == -2)
      throw ZeroDensityInterior("force_field: positive cell " + std::to_string(c) +
                                " has no positive neighbor along an axis");
    if (pat == 0) return 0.0;
    const double dlnp = detail::apply_slope(pat, pat != 1 ? std::log(pm) : 0.0, std::log(p0),
                                            pat != -1 ? std::log(pp) : 0.0, h);
    const double du = detail::apply_slope(pat, um, u0, up, h);
    return -chain.kBT * dlnp - du;
  };

  if (p.dim == 1) {
    const double h = p.gx.h();
    const int n = p.gx.n;
    for (int i = 0; i < n; ++i) {
      const int im = std::max(i - 1, 0), ip = std::min(i + 1, n - 1);
      f.c1[static_cast<std::size_t>(i)] = component(
          static_cast<std::size_t>(i), p.at(im), p.at(i), p.at(ip),
          u[static_cast<std::size_t>(im)], u[static_cast<std::size_t>(i)],
          u[static_cast<std::size_t>(ip)], h, i > 0, i < n - 1);
    }
    return f;
  }
  const int nx = p.gx.n, ny = p.gy.n;
  const double h1 = p.gx.h(), h2 = p.gy.h();
  const auto uat = [&](int i, int j) { return u[static_cast<std::size_t>(i) * ny + j]; };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const std::size_t c = static_cast<std::size_t>(i) * ny + j;
      const int im = std::max(i - 1, 0), ip = std::min(i + 1, nx - 1);
      f.c1[c] = component(c, p.at(im, j), p.at(i, j), p.at(ip, j), uat(im, j), uat(i, j),
                          uat(ip, j), h1, i > 0, i < nx - 1);
      const int jm = std::max(j - 1, 0), jp = std::min(j + 1, ny - 1);
      f.c2[c] = component(c, p.at(i, jm), p.at(i, j), p.at(i, jp), uat(i, jm), uat(i, j),
                          uat(i, jp), h2, j > 0, j < ny - 1);
    }
  return f;
}

/// Probability flux J = (1/eta) B (P Phi): B = 1 for a single coordinate; for
/// the N = 2 extension coordinates B = [[1,-1],[-1,2]] (see FokkerPlanck2D).
inline VectorField flux_field(const DensityField& p, const ChainModel& chain) {
  const VectorField phi = force_field(p, chain);
  VectorField j = phi;
  const double inv_eta = 1.0 / chain.eta;
  if (p.dim == 1) {
    for (std::size_t c = 0; c < p.v.size(); ++c) j.c1[c] = inv_eta * p.v[c] * phi.c1[c];
    return j;
  }
  constexpr double b11 = FokkerPlanck2D::kB11, b12 = FokkerPlanck2D::kB12,
                   b22 = FokkerPlanck2D::kB22;
  for (std::size_t c = 0; c < p.v.size(); ++c) {
    const double f1 = p.v[c] * phi.c1[c], f2 = p.v[c] * phi.c2[c];
    j.c1[c] = inv_eta * (b11 * f1 + b12 * f2);
    j.c2[c] = inv_eta * (b12 * f1 + b22 * f2);
  }
  return j;
}

struct DissipationRate {
  double dpsi_dt;  // -sum J . Phi vol  (<= 0)
  double ep_rate;  // entropy production, -dpsi_dt / kBT (kB = 1 units)
};

/// dPsi/dt = -integral J . Phi; non-positive for any density because the
/// mobility tensor is SPD, zero exactly at equilibrium.
inline DissipationRate dissipation_rate(const DensityField& p, const ChainModel& chain) {
  const VectorField phi = force_field(p, chain);
  const VectorField j = flux_field(p, chain);
  const double vol = p.cell_volume();
  double s = 0.0;
  for (std::size_t c = 0; c < p.v.size(); ++c) {
    s += j.c1[c] * phi.c1[c];
    if (p.dim == 2) s += j.c2[c] * phi.c2[c];
  }
  s *= vol;
  return {-s, s / chain.kBT};
}

struct DescentDiagnostic {
  double cos_angle;
};

/// Alignment between the actual evolution direction dP/dt and the L2
/// steepest-descent direction of Psi (the variational derivative projected
/// onto mass-preserving perturbations), evaluated on the support of P
/// (cells carrying mass). Values in (0, 1]; strictly below 1 means the
/// dynamics does not follow the steepest descent.
inline DescentDiagnostic descent_diagnostic(const DensityField& p, const ChainModel& chain,
                                            const std::vector<double>& dp_dt) {
  chain.require_positive_temperature("descent_diagnostic");
  if (dp_dt.size() != p.v.size()) throw LengthMismatch("descent_diagnostic: size mismatch");
  const auto u = potential_on_grid(chain, p);
  const double vol = p.cell_volume();
  std::vector<double> g(p.v.size(), 0.0);
  double mean_g = 0.0;
  std::size_t support = 0;
  for (std::size_t c = 0; c < p.v.size(); ++c) {
    if (p.v[c] <= detail::kSupportFloor) continue;
    g[c] = -(u[c] + chain.kBT * (1.0 + std::log(p.v[c])));
    mean_g += g[c];
    ++support;
  }
  if (support == 0) return {0.0};
  mean_g /= static_cast<double>(support);
  double dot = 0.0, nrm_r = 0.0, nrm_g = 0.0;
  for (std::size_t c = 0; c < p.v.size(); ++c) {
    if (p.v[c] <= detail::kSupportFloor) continue;
    const double gc = g[c] - mean_g;
    dot += dp_dt[c] * gc;
    nrm_r += dp_dt[c] * dp_dt[c];
    nrm_g += gc * gc;
  }
  dot *= vol;
  nrm_r = std::sqrt(nrm_r * vol);
  nrm_g = std::sqrt(nrm_g * vol);
  if (nrm_r == 0 || nrm_g == 0) return {0.0};
  return {dot / (nrm_r * nrm_g)};
}

/// One instrumented time point of a relaxation run.
struct ThermoReport {
  double t = 0.0;
  double psi = 0.0;
  double psi_eq = 0.0;
  double rel_entropy = 0.0;
  double dissipation = 0.0;
  double ep_rate = 0.0;
  double cos_angle = std::numeric_limits<double>::quiet_NaN();
};

inline ThermoReport make_thermo_report(double t, const DensityField& p, const ChainModel& chain,
                                       const std::vector<double>* dp_dt = nullptr) {
  ThermoReport r;
  r.t = t;
  r.psi = psi_functional(p, chain);
  const PsiParts parts = psi_decomposition(p, chain);
  r.psi_eq = parts.psi_eq;
  r.rel_entropy = parts.rel;
  const DissipationRate d = dissipation_rate(p, chain);
  r.dissipation = d.dpsi_dt;
  r.ep_rate = d.ep_rate;
  if (dp_dt) r.cos_angle = descent_diagnostic(p, chain, *dp_dt).cos_angle;
  return r;
}

struct PsiEstimate {
  double value;
  double stderr_boot;
  DensityField histogram;
};

/// Plug-in Psi estimate from a Langevin ensemble via a histogram density with
/// 2*ceil(W^{1/3}) bins per dimension, plus a 50-resample bootstrap standard
/// error. Defined for N <= 2 (the dimensions the densities cover).
inline PsiEstimate psi_ensemble_estimate(const Ensemble& ens, const ChainModel& chain,
                                         int bootstrap = 50) {
  chain.require_positive_temperature("psi_ensemble_estimate");
  if (chain.n > 2) throw ConfigError("psi_ensemble_estimate: defined for N <= 2");
  const std::size_t w = ens.walkers();
  const int bins = 2 * static_cast<int>(std::ceil(std::pow(static_cast<double>(w), 1.0 / 3.0)));

  // data-driven extent in extension coordinates
  std::vector<double> z1(w), z2;
  if (chain.n == 2) z2.resize(w);
  for (std::size_t i = 0; i < w; ++i) {
    const double* x = ens.walker(i);
    z1[i] = x[0];
    if (chain.n == 2) z2[i] = x[1] - x[0];
  }
  const auto extent = [](const std::vector<double>& v) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const double pad = 1e-9 + 1e-9 * (hi - lo);
    return Grid1D{lo - pad, hi + pad, 1};
  };

  const auto plugin_psi = [&](const DensityField& hist) {
    const auto u = potential_on_grid(chain, hist);
    const double vol = hist.cell_volume();
    double s = 0.0;
    for (std::size_t c = 0; c < hist.v.size(); ++c) {
      const double pc = hist.v[c];
      if (pc > 0) s += u[c] * pc + chain.kBT * pc * std::log(pc);
    }
    return s * vol;
  };

  DensityField hist;
  if (chain.n == 1) {
    Grid1D g = extent(z1);
    g.n = bins;
    hist = histogram_density(z1, g);
  } else {
    Grid1D ga = extent(z1), gb = extent(z2);
    ga.n = bins;
    gb.n = bins;
    hist = DensityField::zeros(Grid2D{ga, gb});
    for (std::size_t i = 0; i < w; ++i) {
      const int a = ga.locate(z1[i]), b = gb.locate(z2[i]);
      if (a >= 0 && b >= 0) hist.at(a, b) += 1.0;
    }
    hist.normalize();
  }
  const double value = plugin_psi(hist);

  // bootstrap over walker resamples, seeded from the ensemble lineage
  double mean = 0.0, m2 = 0.0;
  for (int r = 0; r < bootstrap; ++r) {
    DensityField bh = hist;
    for (auto& x : bh.v) x = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
      const std::size_t pick = static_cast<std::size_t>(
          counter_uniform(ens.master_seed ^ 0xB00157u, static_cast<std::uint64_t>(r), i, 7) *
          static_cast<double>(w));
      const std::size_t q = pick >= w ? w - 1 : pick;
      if (chain.n == 1) {
        const int a = bh.gx.locate(z1[q]);
        if (a >= 0) bh.at(a) += 1.0;
      } else {
        const int a = bh.gx.locate(z1[q]), b = bh.gy.locate(z2[q]);
        if (a >= 0 && b >= 0) bh.at(a, b) += 1.0;
      }
    }
    bh.normalize();
    const double psi_r = plugin_psi(bh);
    const double delta = psi_r - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (psi_r - mean);
  }
  const double se = bootstrap > 1 ? std::sqrt(m2 / static_cast<double>(bootstrap - 1)) : 0.0;
  return {value, se, hist};
}

}  // namespace relent

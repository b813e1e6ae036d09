#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "relent/chain.hpp"
#include "relent/equilibrium.hpp"
#include "relent/errors.hpp"
#include "relent/grid.hpp"
#include "relent/rng.hpp"

namespace relent {

/// Population of chain states sharing one model and one clock. Coordinates are
/// stored walker-major; the noise stream of walker w is fixed by (master_seed,
/// w, step, coordinate), so results do not depend on how walkers are split
/// across workers.
struct Ensemble {
  int n_coords = 1;
  double time = 0.0;
  long long step_count = 0;
  std::uint64_t master_seed = 0;
  std::vector<double> coords;

  static Ensemble zeros(int n_coords, std::size_t walkers, std::uint64_t seed) {
    Ensemble e;
    e.n_coords = n_coords;
    e.master_seed = seed;
    e.coords.assign(walkers * static_cast<std::size_t>(n_coords), 0.0);
    return e;
  }

  std::size_t walkers() const {
    return coords.size() / static_cast<std::size_t>(n_coords);
  }
  double* walker(std::size_t w) { return coords.data() + w * static_cast<std::size_t>(n_coords); }
  const double* walker(std::size_t w) const {
    return coords.data() + w * static_cast<std::size_t>(n_coords);
  }
  ChainState state(std::size_t w) const {
    ChainState s;
    s.junctions.assign(walker(w), walker(w) + n_coords);
    s.time = time;
    return s;
  }
};

/// U(x) = sum_k phi(x_k - x_{k-1}), the chain potential of one configuration.
inline double chain_potential(const ChainModel& chain, const ChainState& state) {
  check_state_domain(chain, state);
  double u = 0.0;
  for (double z : state.extensions()) u += chain.phi.value(z);
  return u;
}

namespace detail {

/// -dU/dx_k = -(phi'(z_k) - phi'(z_{k+1})); the last junction lacks the
/// right-neighbor term.
inline void chain_force_raw(const ChainModel& chain, const double* x, double* f) {
  const int n = chain.n;
  double prev = 0.0;
  for (int k = 0; k < n; ++k) {
    const double zk = x[k] - prev;
    f[k] = -chain.phi.grad(zk);
    if (k + 1 < n) f[k] += chain.phi.grad(x[k + 1] - x[k]);
    prev = x[k];
  }
}

}  // namespace detail

inline std::vector<double> chain_force(const ChainModel& chain, const ChainState& state) {
  if (state.n() != chain.n) throw LengthMismatch("chain_force: size mismatch");
  std::vector<double> f(static_cast<std::size_t>(chain.n));
  detail::chain_force_raw(chain, state.junctions.data(), f.data());
  return f;
}

/// One Euler-Maruyama step of every walker:
///   x <- x + (F/eta) dt + sqrt(2 kBT dt / eta) xi.
/// On a half-line domain, extensions driven below zero are reflected
/// (z <- -z) before the junctions are rebuilt.
inline void langevin_step(Ensemble& ens, const ChainModel& chain, double dt) {
  if (ens.n_coords != chain.n) throw LengthMismatch("langevin_step: coordinate count mismatch");
  if (!(dt > 0)) throw ConfigError("langevin_step: dt must be positive");
  const double sigma = std::sqrt(2.0 * chain.kBT * dt / chain.eta);
  const double inv_eta = 1.0 / chain.eta;
  const bool half_line = chain.domain.kind == CoordinateDomain::Kind::HalfLine;
  const std::size_t nw = ens.walkers();
  const int n = chain.n;
  std::vector<double> f(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n));
  const std::uint64_t step_key = static_cast<std::uint64_t>(ens.step_count);
  for (std::size_t w = 0; w < nw; ++w) {
    double* x = ens.walker(w);
    detail::chain_force_raw(chain, x, f.data());
    for (int k = 0; k < n; ++k)
      x[k] += f[static_cast<std::size_t>(k)] * inv_eta * dt +
              sigma * counter_normal(ens.master_seed, w, step_key, static_cast<std::uint64_t>(k));
    if (half_line) {
      double prev = 0.0;
      for (int k = 0; k < n; ++k) {
        double zk = x[k] - prev;
        if (zk < 0) zk = -zk;
        z[static_cast<std::size_t>(k)] = zk;
        prev = x[k];
      }
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        acc += z[static_cast<std::size_t>(k)];
        x[k] = acc;
      }
    }
  }
  ens.time += dt;
  ens.step_count += 1;
}

/// Exact iid equilibrium ensemble via inverse-CDF extension sampling.
inline Ensemble sample_equilibrium_ensemble(const ChainModel& chain, std::size_t walkers,
                                            std::uint64_t seed) {
  const ExtensionSampler sampler(chain);
  Rng rng(seed);
  Ensemble e = Ensemble::zeros(chain.n, walkers, seed);
  for (std::size_t w = 0; w < walkers; ++w) {
    double acc = 0.0;
    double* x = e.walker(w);
    for (int k = 0; k < chain.n; ++k) {
      acc += sampler.draw(rng);
      x[k] = acc;
    }
  }
  return e;
}

/// Ensemble with iid Gaussian extensions (mean[k], sigma[k]); on a half line
/// the draws are reflected to non-negative values.
inline Ensemble gaussian_extension_ensemble(const ChainModel& chain,
                                            const std::vector<double>& mean,
                                            const std::vector<double>& sigma,
                                            std::size_t walkers, std::uint64_t seed) {
  if (static_cast<int>(mean.size()) != chain.n || static_cast<int>(sigma.size()) != chain.n)
    throw LengthMismatch("gaussian_extension_ensemble: parameter size mismatch");
  Rng rng(seed);
  Ensemble e = Ensemble::zeros(chain.n, walkers, seed);
  const bool half_line = chain.domain.kind == CoordinateDomain::Kind::HalfLine;
  for (std::size_t w = 0; w < walkers; ++w) {
    double acc = 0.0;
    double* x = e.walker(w);
    for (int k = 0; k < chain.n; ++k) {
      double z = mean[static_cast<std::size_t>(k)] +
                 sigma[static_cast<std::size_t>(k)] * rng.normal();
      if (half_line && z < 0) z = -z;
      acc += z;
      x[k] = acc;
    }
  }
  return e;
}

/// Discrete Boltzmann state of the finite-volume scheme: cell-center weights
/// e^{-U/kBT}, normalized. This is the exact stationary state of the
/// exponential-fitting discretization.
inline DensityField discrete_boltzmann(const ChainModel& chain, const Grid1D& grid) {
  chain.require_positive_temperature("discrete_boltzmann");
  if (chain.n != 1) throw ConfigError("discrete_boltzmann: 1-D grid requires N = 1");
  DensityField f = DensityField::zeros(grid);
  for (int i = 0; i < grid.n; ++i)
    f.at(i) = std::exp(-chain.phi.value(grid.center(i)) / chain.kBT);
  f.normalize();
  return f;
}

inline DensityField discrete_boltzmann(const ChainModel& chain, const Grid2D& grid) {
  chain.require_positive_temperature("discrete_boltzmann");
  if (chain.n != 2) throw ConfigError("discrete_boltzmann: 2-D grid requires N = 2");
  DensityField f = DensityField::zeros(grid);
  for (int i = 0; i < grid.x.n; ++i)
    for (int j = 0; j < grid.y.n; ++j)
      f.at(i, j) = std::exp(
          -(chain.phi.value(grid.x.center(i)) + chain.phi.value(grid.y.center(j))) / chain.kBT);
  f.normalize();
  return f;
}

/// Cell-averaged Gaussian density (exact error-function cell masses),
/// grid-truncated and renormalized. Same-sign tails go through erfc so the
/// masses stay positive down to the underflow limit (~37 sigma) instead of
/// cancelling to zero at ~8 sigma.
inline DensityField gaussian_field(const Grid1D& grid, double mean, double sigma) {
  DensityField f = DensityField::zeros(grid);
  const double inv = 1.0 / (sigma * std::sqrt(2.0));
  for (int i = 0; i < grid.n; ++i) {
    const double za = (grid.edge(i) - mean) * inv;
    const double zb = (grid.edge(i + 1) - mean) * inv;
    double mass;
    if (za >= 0.0 && zb >= 0.0)
      mass = 0.5 * (std::erfc(za) - std::erfc(zb));
    else if (za <= 0.0 && zb <= 0.0)
      mass = 0.5 * (std::erfc(-zb) - std::erfc(-za));
    else
      mass = 0.5 * (std::erf(zb) - std::erf(za));
    f.at(i) = std::max(mass, 0.0) / grid.h();
  }
  f.normalize();
  return f;
}

inline DensityField gaussian_field(const Grid2D& grid, double mx, double sx, double my,
                                   double sy) {
  DensityField f = DensityField::zeros(grid);
  const DensityField fx = gaussian_field(grid.x, mx, sx);
  const DensityField fy = gaussian_field(grid.y, my, sy);
  for (int i = 0; i < grid.x.n; ++i)
    for (int j = 0; j < grid.y.n; ++j) f.at(i, j) = fx.at(i) * fy.at(j);
  f.normalize();
  return f;
}

enum class FPScheme { ExponentialFitting, CentralUpwind };

/// Explicit finite-volume configuration. The stability invariant
/// dt <= 0.4 eta dx^2 / kBT is enforced at construction; solvers additionally
/// enforce their own (scheme- and dimension-specific) sufficient bounds.
struct FPSolverConfig {
  double dt;
  Grid1D grid;        // dim 1
  Grid2D grid2;       // dim 2
  int dim = 1;
  FPScheme scheme = FPScheme::ExponentialFitting;

  static FPSolverConfig make_1d(const ChainModel& chain, double dt, const Grid1D& grid,
                                FPScheme scheme = FPScheme::ExponentialFitting) {
    check_dt(chain, dt, grid.h());
    FPSolverConfig c;
    c.dt = dt;
    c.grid = grid;
    c.dim = 1;
    c.scheme = scheme;
    return c;
  }
  static FPSolverConfig make_2d(const ChainModel& chain, double dt, const Grid2D& grid,
                                FPScheme scheme = FPScheme::ExponentialFitting) {
    check_dt(chain, dt, std::min(grid.x.h(), grid.y.h()));
    FPSolverConfig c;
    c.dt = dt;
    c.grid2 = grid;
    c.dim = 2;
    c.scheme = scheme;
    return c;
  }

  static void check_dt(const ChainModel& chain, double dt, double h) {
    if (!(dt > 0)) throw ConfigError("fp: dt must be positive");
    chain.require_positive_temperature("fp solver");
    const double bound = 0.4 * chain.eta * h * h / chain.kBT;
    if (dt > bound)
      throw StabilityViolation("fp: dt = " + std::to_string(dt) +
                               " exceeds stability bound; use dt <= " + std::to_string(bound));
  }
};

namespace detail {

/// Bernoulli function u / (e^u - 1), the exponential-fitting face weight.
inline double bernoulli(double u) {
  if (std::abs(u) < 1e-8) return 1.0 - 0.5 * u + u * u / 12.0;
  return u / std::expm1(u);
}

}  // namespace detail

/// Conservative explicit solver for the one-coordinate Smoluchowski equation
///   dP/dt = d/dx[(kBT/eta) dP/dx + (U'/eta) P].
/// Exponential-fitting face fluxes are exact for locally linear U, keep the
/// discrete Boltzmann state exactly stationary, and preserve positivity under
/// the enforced time-step bound. Zero-flux boundaries at the grid ends.
class FokkerPlanck1D {
 public:
  FokkerPlanck1D(const ChainModel& chain, const FPSolverConfig& cfg)
      : chain_(chain), cfg_(cfg), g_(cfg.grid) {
    if (cfg.dim != 1) throw ConfigError("FokkerPlanck1D: config is not 1-D");
    if (chain.n != 1) throw ConfigError("FokkerPlanck1D: chain must have N = 1");
    chain.require_positive_temperature("FokkerPlanck1D");
    FPSolverConfig::check_dt(chain, cfg.dt, g_.h());
    d_ = chain.kBT / chain.eta;
    const int nf = g_.n - 1;
    bp_.resize(static_cast<std::size_t>(nf));
    bm_.resize(static_cast<std::size_t>(nf));
    vel_.resize(static_cast<std::size_t>(nf));
    double max_out = 0.0;
    for (int f = 0; f < nf; ++f) {
      const double du = chain.phi.value(g_.center(f + 1)) - chain.phi.value(g_.center(f));
      const double u = du / chain.kBT;
      if (cfg.scheme == FPScheme::ExponentialFitting) {
        bp_[static_cast<std::size_t>(f)] = detail::bernoulli(u);
        bm_[static_cast<std::size_t>(f)] = detail::bernoulli(-u);
      } else {
        bp_[static_cast<std::size_t>(f)] = 1.0;
        bm_[static_cast<std::size_t>(f)] = 1.0;
        vel_[static_cast<std::size_t>(f)] = -du / (chain.eta * g_.h());
      }
    }
    for (int i = 0; i < g_.n; ++i) {
      double out = 0.0;
      if (i > 0) out += face_out_left(i);
      if (i < g_.n - 1) out += face_out_right(i);
      max_out = std::max(max_out, out);
    }
    if (cfg.dt * max_out > 1.0)
      throw StabilityViolation("fp1d: dt too large for positivity; use dt <= " +
                               std::to_string(1.0 / max_out));
  }

  const Grid1D& grid() const { return g_; }
  double dt() const { return cfg_.dt; }
  DensityField boltzmann() const { return discrete_boltzmann(chain_, g_); }

  /// Face fluxes J_{i+1/2}, including the zero boundary fluxes (size n+1).
  std::vector<double> fluxes(const DensityField& p) const {
    require_grid(p);
    std::vector<double> j(static_cast<std::size_t>(g_.n) + 1, 0.0);
    const double h = g_.h();
    for (int f = 0; f < g_.n - 1; ++f) {
      double flux;
      if (cfg_.scheme == FPScheme::ExponentialFitting) {
        flux = d_ / h *
               (bp_[static_cast<std::size_t>(f)] * p.at(f) -
                bm_[static_cast<std::size_t>(f)] * p.at(f + 1));
      } else {
        const double v = vel_[static_cast<std::size_t>(f)];  // face drift velocity
        flux = d_ / h * (p.at(f) - p.at(f + 1)) + (v > 0 ? v * p.at(f) : v * p.at(f + 1));
      }
      j[static_cast<std::size_t>(f) + 1] = flux;
    }
    return j;
  }

  /// dP/dt of the semi-discrete scheme (the negative discrete flux divergence).
  std::vector<double> time_derivative(const DensityField& p) const {
    const auto j = fluxes(p);
    std::vector<double> r(static_cast<std::size_t>(g_.n));
    const double inv_h = 1.0 / g_.h();
    for (int i = 0; i < g_.n; ++i)
      r[static_cast<std::size_t>(i)] =
          (j[static_cast<std::size_t>(i)] - j[static_cast<std::size_t>(i) + 1]) * inv_h;
    return r;
  }

  /// One explicit step; mass is conserved exactly (telescoping fluxes).
  void step(DensityField& p) const {
    const auto r = time_derivative(p);
    for (int i = 0; i < g_.n; ++i) {
      p.at(i) += cfg_.dt * r[static_cast<std::size_t>(i)];
      if (p.at(i) < 0) {
        if (p.at(i) < -1e-14)
          throw NegativeDensity("fp1d: cell " + std::to_string(i) + " fell to " +
                                std::to_string(p.at(i)));
        p.at(i) = 0.0;
      }
    }
  }

 private:
  double face_out_left(int i) const {
    const std::size_t f = static_cast<std::size_t>(i) - 1;
    const double h = g_.h();
    if (cfg_.scheme == FPScheme::ExponentialFitting) return d_ * bm_[f] / (h * h);
    return d_ / (h * h) + std::max(-vel_[f], 0.0) / h;
  }
  double face_out_right(int i) const {
    const std::size_t f = static_cast<std::size_t>(i);
    const double h = g_.h();
    if (cfg_.scheme == FPScheme::ExponentialFitting) return d_ * bp_[f] / (h * h);
    return d_ / (h * h) + std::max(vel_[f], 0.0) / h;
  }
  void require_grid(const DensityField& p) const {
    if (p.dim != 1 || !(p.gx == g_)) throw LengthMismatch("fp1d: density grid mismatch");
  }

  ChainModel chain_;
  FPSolverConfig cfg_;
  Grid1D g_;
  double d_;
  std::vector<double> bp_, bm_, vel_;
};

/// N = 2 solver in extension coordinates (z1, z2) = (x1, x2 - x1).
///
/// With M = [[1,0],[-1,1]] (z = M x) the junction-space Smoluchowski equation
/// transforms to
///   dP/dt = div_z [ (1/eta) B (kBT grad_z P + P grad_z U) ],
///   B = M M^T = [[1,-1],[-1,2]],  U(z) = phi(z1) + phi(z2).
/// The diffusion tensor is constant and SPD, U separates, and half-line
/// boundary conditions become axis-aligned zero-flux walls, which is why this
/// coordinate system is used. Primitive per-axis fluxes use exponential
/// fitting, so they vanish identically on the discrete Boltzmann state; the
/// cross (b12) contributions average the four adjacent transverse primitive
/// fluxes and therefore vanish there too, making the Boltzmann state exactly
/// stationary. Total normal fluxes are zero at the boundary faces.
class FokkerPlanck2D {
 public:
  FokkerPlanck2D(const ChainModel& chain, const FPSolverConfig& cfg)
      : chain_(chain), cfg_(cfg), g_(cfg.grid2) {
    if (cfg.dim != 2) throw ConfigError("FokkerPlanck2D: config is not 2-D");
    if (chain.n != 2) throw ConfigError("FokkerPlanck2D: chain must have N = 2");
    chain.require_positive_temperature("FokkerPlanck2D");
    if (cfg.scheme != FPScheme::ExponentialFitting)
      throw ConfigError("FokkerPlanck2D: only the exponential-fitting scheme is implemented");
    d_ = chain.kBT / chain.eta;
    build_axis(g_.x, bpx_, bmx_);
    build_axis(g_.y, bpy_, bmy_);
    double mx = 2.0, my = 2.0;
    for (std::size_t f = 0; f < bpx_.size(); ++f) mx = std::max(mx, bpx_[f] + bmx_[f]);
    for (std::size_t f = 0; f < bpy_.size(); ++f) my = std::max(my, bpy_[f] + bmy_[f]);
    const double h1 = g_.x.h(), h2 = g_.y.h();
    // von-Neumann-style sufficient rate bound with B = [[1,-1],[-1,2]]
    const double rate = d_ * (kB11 * mx / (h1 * h1) + kB22 * my / (h2 * h2) +
                              std::abs(kB12) * 0.5 * (mx + my) / (h1 * h2));
    if (cfg.dt * rate > 0.9)
      throw StabilityViolation("fp2d: dt too large for the cross-diffusion scheme; use dt <= " +
                               std::to_string(0.5 / rate));
  }

  static constexpr double kB11 = 1.0;
  static constexpr double kB12 = -1.0;
  static constexpr double kB22 = 2.0;

  const Grid2D& grid() const { return g_; }
  double dt() const { return cfg_.dt; }
  DensityField boltzmann() const { return discrete_boltzmann(chain_, g_); }

  struct FaceFluxes {
    std::vector<double> j1;  // (nx+1) x ny, boundary faces zero
    std::vector<double> j2;  // nx x (ny+1), boundary faces zero
  };

  /// Total face fluxes J1 = b11 Gx + b12 avg(Gy), J2 = b12 avg(Gx) + b22 Gy,
  /// from the exponential-fitting primitive fluxes G per axis. The cross
  /// terms average the four adjacent transverse faces. When `limited`, each
  /// face flux is scaled by its donor cell's availability (Zalesak-style) so
  /// an explicit step cannot drive any cell negative; the limiter is inactive
  /// wherever fluxes vanish, so Boltzmann stationarity is untouched, and the
  /// scaling is face-based, so conservation stays exact.
  FaceFluxes fluxes(const DensityField& p, bool limited) const {
    require_grid(p);
    const int nx = g_.x.n, ny = g_.y.n;
    const double h1 = g_.x.h(), h2 = g_.y.h();
    std::vector<double> gx(static_cast<std::size_t>(nx + 1) * ny, 0.0);
    std::vector<double> gy(static_cast<std::size_t>(nx) * (ny + 1), 0.0);
    const auto gx_at = [&](int f, int j) -> double& {
      return gx[static_cast<std::size_t>(f) * ny + j];
    };
    const auto gy_at = [&](int i, int f) -> double& {
      return gy[static_cast<std::size_t>(i) * (ny + 1) + f];
    };
    for (int f = 1; f < nx; ++f)
      for (int j = 0; j < ny; ++j)
        gx_at(f, j) = d_ / h1 *
                      (bpx_[static_cast<std::size_t>(f) - 1] * p.at(f - 1, j) -
                       bmx_[static_cast<std::size_t>(f) - 1] * p.at(f, j));
    for (int i = 0; i < nx; ++i)
      for (int f = 1; f < ny; ++f)
        gy_at(i, f) = d_ / h2 *
                      (bpy_[static_cast<std::size_t>(f) - 1] * p.at(i, f - 1) -
                       bmy_[static_cast<std::size_t>(f) - 1] * p.at(i, f));
    FaceFluxes out;
    out.j1.assign(gx.size(), 0.0);
    out.j2.assign(gy.size(), 0.0);
    for (int f = 1; f < nx; ++f)
      for (int j = 0; j < ny; ++j) {
        const double cross = 0.25 * (gy_at(f - 1, j) + gy_at(f - 1, j + 1) + gy_at(f, j) +
                                     gy_at(f, j + 1));
        out.j1[static_cast<std::size_t>(f) * ny + j] = kB11 * gx_at(f, j) + kB12 * cross;
      }
    for (int i = 0; i < nx; ++i)
      for (int f = 1; f < ny; ++f) {
        const double cross = 0.25 * (gx_at(i, f - 1) + gx_at(i + 1, f - 1) + gx_at(i, f) +
                                     gx_at(i + 1, f));
        out.j2[static_cast<std::size_t>(i) * (ny + 1) + f] =
            kB12 * cross + kB22 * gy_at(i, f);
      }
    if (!limited) return out;

    // donor-cell limiter: theta_c = min(1, P_c / (dt * outflow_c))
    std::vector<double> theta(p.v.size(), 1.0);
    const auto j1_at = [&](int f, int j) { return out.j1[static_cast<std::size_t>(f) * ny + j]; };
    const auto j2_at = [&](int i, int f) {
      return out.j2[static_cast<std::size_t>(i) * (ny + 1) + f];
    };
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        double outflow = std::max(j1_at(i + 1, j), 0.0) / h1 +
                         std::max(-j1_at(i, j), 0.0) / h1 +
                         std::max(j2_at(i, j + 1), 0.0) / h2 +
                         std::max(-j2_at(i, j), 0.0) / h2;
        if (outflow > 0) {
          const double cap = p.at(i, j) / (cfg_.dt * outflow);
          if (cap < 1.0) theta[static_cast<std::size_t>(i) * ny + j] = std::max(cap, 0.0);
        }
      }
    for (int f = 1; f < nx; ++f)
      for (int j = 0; j < ny; ++j) {
        double& jf = out.j1[static_cast<std::size_t>(f) * ny + j];
        const std::size_t donor = jf > 0 ? static_cast<std::size_t>(f - 1) * ny + j
                                         : static_cast<std::size_t>(f) * ny + j;
        jf *= theta[donor];
      }
    for (int i = 0; i < nx; ++i)
      for (int f = 1; f < ny; ++f) {
        double& jf = out.j2[static_cast<std::size_t>(i) * (ny + 1) + f];
        const std::size_t donor = jf > 0 ? static_cast<std::size_t>(i) * ny + (f - 1)
                                         : static_cast<std::size_t>(i) * ny + f;
        jf *= theta[donor];
      }
    return out;
  }

  /// dP/dt of the (limited) semi-discrete scheme.
  std::vector<double> time_derivative(const DensityField& p) const {
    const FaceFluxes jf = fluxes(p, true);
    const int nx = g_.x.n, ny = g_.y.n;
    const double h1 = g_.x.h(), h2 = g_.y.h();
    std::vector<double> r(p.v.size(), 0.0);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j)
        r[static_cast<std::size_t>(i) * ny + j] =
            (jf.j1[static_cast<std::size_t>(i) * ny + j] -
             jf.j1[static_cast<std::size_t>(i + 1) * ny + j]) /
                h1 +
            (jf.j2[static_cast<std::size_t>(i) * (ny + 1) + j] -
             jf.j2[static_cast<std::size_t>(i) * (ny + 1) + j + 1]) /
                h2;
    return r;
  }

  void step(DensityField& p) const {
    const auto r = time_derivative(p);
    for (std::size_t c = 0; c < p.v.size(); ++c) {
      p.v[c] += cfg_.dt * r[c];
      if (p.v[c] < 0) {
        if (p.v[c] < -1e-14)
          throw NegativeDensity("fp2d: cell " + std::to_string(c) + " fell to " +
                                std::to_string(p.v[c]));
        p.v[c] = 0.0;
      }
    }
  }

 private:
  void build_axis(const Grid1D& g, std::vector<double>& bp, std::vector<double>& bm) const {
    bp.resize(static_cast<std::size_t>(g.n) - 1);
    bm.resize(static_cast<std::size_t>(g.n) - 1);
    for (int f = 0; f + 1 < g.n; ++f) {
      const double du = chain_.phi.value(g.center(f + 1)) - chain_.phi.value(g.center(f));
      const double u = du / chain_.kBT;
      bp[static_cast<std::size_t>(f)] = detail::bernoulli(u);
      bm[static_cast<std::size_t>(f)] = detail::bernoulli(-u);
    }
  }
  void require_grid(const DensityField& p) const {
    if (p.dim != 2 || !(p.gx == g_.x) || !(p.gy == g_.y))
      throw LengthMismatch("fp2d: density grid mismatch");
  }

  ChainModel chain_;
  FPSolverConfig cfg_;
  Grid2D g_;
  double d_;
  std::vector<double> bpx_, bmx_, bpy_, bmy_;
};

/// Advances a density to t_final with the given solver, invoking
/// obs(step_index, time, P) at step 0, every `every` steps, and at the end.
/// t_final = 0 performs no steps. Returns the reached time.
template <class Solver, class Obs>
double relax_fp(Solver& solver, DensityField& p, double t_final, int every, Obs&& obs) {
  if (every < 1) every = 1;
  const double t0 = 0.0;
  long long steps = t_final > 0 ? static_cast<long long>(std::ceil(t_final / solver.dt() - 1e-12))
                                : 0;
  obs(0LL, t0, p);
  for (long long s = 1; s <= steps; ++s) {
    solver.step(p);
    if (s % every == 0 || s == steps) obs(s, t0 + static_cast<double>(s) * solver.dt(), p);
  }
  return t0 + static_cast<double>(steps) * solver.dt();
}

/// Langevin counterpart of relax_fp; obs(step_index, time, ensemble).
template <class Obs>
double relax_langevin(Ensemble& ens, const ChainModel& chain, double dt, double t_final,
                      int every, Obs&& obs) {
  if (every < 1) every = 1;
  long long steps = t_final > 0 ? static_cast<long long>(std::ceil(t_final / dt - 1e-12)) : 0;
  obs(0LL, ens.time, ens);
  for (long long s = 1; s <= steps; ++s) {
    langevin_step(ens, chain, dt);
    if (s % every == 0 || s == steps) obs(s, ens.time, ens);
  }
  return ens.time;
}

/// Histogram density of scalar samples; samples outside the grid are dropped
/// and counted in *dropped (caller decides how much loss is tolerable).
inline DensityField histogram_density(const std::vector<double>& samples, const Grid1D& grid,
                                      std::size_t* dropped = nullptr) {
  DensityField f = DensityField::zeros(grid);
  std::size_t out = 0;
  for (double x : samples) {
    const int i = grid.locate(x);
    if (i < 0) {
      ++out;
      continue;
    }
    f.at(i) += 1.0;
  }
  if (dropped) *dropped = out;
  if (samples.size() > out) f.normalize();
  return f;
}

/// 2-D histogram of ensemble extension pairs (z1, z2) for N = 2 chains.
inline DensityField histogram_density_2d(const Ensemble& ens, const Grid2D& grid,
                                         std::size_t* dropped = nullptr) {
  if (ens.n_coords != 2) throw LengthMismatch("histogram_density_2d: N = 2 ensembles only");
  DensityField f = DensityField::zeros(grid);
  std::size_t out = 0;
  for (std::size_t w = 0; w < ens.walkers(); ++w) {
    const double* x = ens.walker(w);
    const int i = grid.x.locate(x[0]);
    const int j = grid.y.locate(x[1] - x[0]);
    if (i < 0 || j < 0) {
      ++out;
      continue;
    }
    f.at(i, j) += 1.0;
  }
  if (dropped) *dropped = out;
  if (ens.walkers() > out) f.normalize();
  return f;
}

}  // namespace relent

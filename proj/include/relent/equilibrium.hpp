#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "relent/chain.hpp"
#include "relent/errors.hpp"
#include "relent/fft.hpp"
#include "relent/grid.hpp"
#include "relent/quadrature.hpp"
#include "relent/rng.hpp"

namespace relent {

/// Scalar field on a 1-D grid; NaN marks cells where the value is unavailable.
struct ScalarField1D {
  Grid1D g;
  std::vector<double> v;
  bool available(int i) const { return !std::isnan(v[static_cast<std::size_t>(i)]); }
};

namespace detail {

/// Piecewise-constant density on a uniform lattice: value v[i] on
/// [lo + i h, lo + (i+1) h).
struct PcDensity {
  double lo = 0.0;
  double h = 1.0;
  std::vector<double> v;

  double mass() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s * h;
  }
};

/// Cell masses of exp(-phi/kBT) on [lo, hi] with n cells (fixed GK panel per
/// cell; panel error is negligible at the resolutions used).
inline std::vector<double> boltzmann_cell_masses(const Potential& phi, double kBT, double lo,
                                                 double hi, int n) {
  std::vector<double> m(static_cast<std::size_t>(n));
  const double h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    const double a = lo + i * h, b = lo + (i + 1) * h;
    m[static_cast<std::size_t>(i)] =
        integrate_panel([&](double x) { return std::exp(-phi.value(x) / kBT); }, a, b);
  }
  return m;
}

/// Exact N-fold convolution of a piecewise-constant density with itself,
/// expressed again as cell averages on the aligned lattice (the pairwise
/// rule c_k = (d_k + d_{k-1})/2 on mass sequences, iterated via one FFT pair:
/// mass symbol M(w)^N * ((1 + e^{-iw})/2)^{N-1}).
inline PcDensity pc_self_convolve(const PcDensity& p, int n_fold) {
  if (n_fold == 1) return p;
  const std::size_t ns = p.v.size();
  const std::size_t out_len = static_cast<std::size_t>(n_fold) * ns;
  const std::size_t padded = next_pow2(out_len);
  std::vector<std::complex<double>> a(padded, 0.0);
  for (std::size_t i = 0; i < ns; ++i) a[i] = p.v[i] * p.h;  // masses
  fft_inplace(a, false);
  for (auto& c : a) {
    // half-sample smoothing symbol is applied in closed form below
    c = std::pow(c, n_fold);
  }
  for (std::size_t k = 0; k < padded; ++k) {
    const double ang = -2.0 * 3.141592653589793238462643383279502884 *
                       static_cast<double>(k) / static_cast<double>(padded);
    const std::complex<double> s = 0.5 * (1.0 + std::complex<double>(std::cos(ang), std::sin(ang)));
    a[k] *= std::pow(s, n_fold - 1);
  }
  fft_inplace(a, true);
  PcDensity out;
  out.lo = p.lo * n_fold;
  out.h = p.h;
  out.v.resize(out_len);
  for (std::size_t k = 0; k < out_len; ++k) {
    double m = a[k].real();
    if (m < 0) {
      if (m < -1e-9) throw Error("pc_self_convolve: fft produced a large negative mass");
      m = 0.0;
    }
    out.v[k] = m / p.h;
  }
  const double total = out.mass();
  if (!(total > 0)) throw Error("pc_self_convolve: zero mass");
  for (double& x : out.v) x /= total;
  return out;
}

/// Pairwise exact convolution of two piecewise-constant densities on the same
/// spacing; used by consistency checks against the FFT power route.
inline PcDensity pc_convolve(const PcDensity& a, const PcDensity& b) {
  if (std::abs(a.h - b.h) > 1e-12 * a.h)
    throw LengthMismatch("pc_convolve: lattice spacings differ");
  const std::size_t na = a.v.size(), nb = b.v.size();
  std::vector<double> d(na + nb - 1, 0.0);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) d[i + j] += a.v[i] * b.v[j] * a.h;
  PcDensity out;
  out.lo = a.lo + b.lo;
  out.h = a.h;
  out.v.assign(na + nb, 0.0);
  for (std::size_t k = 0; k < na + nb; ++k) {
    const double dk = k < d.size() ? d[k] : 0.0;
    const double dk1 = (k >= 1 && k - 1 < d.size()) ? d[k - 1] : 0.0;
    out.v[k] = 0.5 * (dk + dk1);
  }
  return out;
}

/// Conservative re-binning of a pc density onto a requested grid. Throws
/// GridTooCoarse if more than tail_tol of the mass falls outside the grid.
inline DensityField rebin_pc(const PcDensity& p, const Grid1D& grid, double tail_tol = 1e-9) {
  DensityField out = DensityField::zeros(grid);
  const double mass_in = [&] {
    double s = 0.0;
    for (int i = 0; i < grid.n; ++i) {
      const double a = grid.edge(i), b = grid.edge(i + 1);
      // overlap integral of pc over [a,b]
      const double ra = (a - p.lo) / p.h, rb = (b - p.lo) / p.h;
      const std::size_t n = p.v.size();
      const double ca = std::clamp(ra, 0.0, static_cast<double>(n));
      const double cb = std::clamp(rb, 0.0, static_cast<double>(n));
      double acc = 0.0;
      for (std::size_t j = static_cast<std::size_t>(ca); j < cb; ++j) {
        const double seg_lo = std::max(ca, static_cast<double>(j));
        const double seg_hi = std::min(cb, static_cast<double>(j + 1));
        if (seg_hi > seg_lo) acc += p.v[j] * (seg_hi - seg_lo) * p.h;
      }
      out.at(i) = acc / grid.h();
      s += acc;
    }
    return s;
  }();
  const double total = p.mass();
  if (total - mass_in > tail_tol * total)
    throw GridTooCoarse("requested grid misses " + std::to_string(total - mass_in) +
                        " of the marginal mass");
  out.normalize();
  return out;
}

}  // namespace detail

/// Single-subunit extension density p(x) = exp(-phi/kBT)/z, cell-averaged and
/// normalized on the given grid. The grid must cover the coordinate domain.
inline DensityField subunit_density(const ChainModel& chain, const Grid1D& grid) {
  chain.require_positive_temperature("subunit_density");
  const auto& dom = chain.domain;
  if (grid.lo > dom.lower() + 1e-12 || grid.hi < dom.upper() - 1e-12)
    throw GridTooCoarse("subunit_density: grid does not cover the coordinate domain");
  DensityField f = DensityField::zeros(grid);
  for (int i = 0; i < grid.n; ++i) {
    const double a = std::max(grid.edge(i), dom.lower());
    const double b = std::min(grid.edge(i + 1), dom.upper());
    if (b > a)
      f.at(i) = integrate_panel(
                    [&](double x) { return std::exp(-chain.phi.value(x) / chain.kBT); }, a, b) /
                grid.h();
  }
  f.normalize();
  return f;
}

/// ln Z = N ln z, kept in the log domain (z^N overflows for modest N).
inline double log_partition_function(const ChainModel& chain) {
  chain.require_positive_temperature("log_partition_function");
  return chain.n * std::log(subunit_partition(chain.phi, chain.kBT, chain.domain));
}

/// ln P_eq(state) = -sum_k phi(z_k)/kBT - ln Z.
inline double joint_log_density(const ChainModel& chain, const ChainState& state) {
  chain.require_positive_temperature("joint_log_density");
  check_state_domain(chain, state);
  double e = 0.0;
  for (double z : state.extensions()) e += chain.phi.value(z);
  return -e / chain.kBT - log_partition_function(chain);
}

/// Distribution of the free end x_N: the N-fold convolution of the subunit
/// extension density (extensions are iid), evaluated as cell averages on the
/// requested grid. Throws GridTooCoarse when the grid misses > 1e-9 mass.
inline DensityField end_marginal(const ChainModel& chain, const Grid1D& grid,
                                 int internal_min_cells = 4096) {
  chain.require_positive_temperature("end_marginal");
  if (chain.n == 1) return subunit_density(chain, grid);
  const auto& dom = chain.domain;
  const double span = dom.upper() - dom.lower();
  int cells = internal_min_cells;
  const int wanted = static_cast<int>(std::ceil(span / grid.h()));
  if (2 * wanted > cells) cells = 2 * wanted;
  // keep the N-fold convolution lattice within memory; the marginal only has
  // O(sqrt(N)) width so a coarser subunit table loses no resolved detail
  const long long max_lattice = 1LL << 24;
  if (static_cast<long long>(cells) * chain.n > max_lattice) {
    cells = static_cast<int>(max_lattice / chain.n);
    if (cells < 256)
      throw NonConvergent("end_marginal: N too large for the requested grid resolution");
  }
  detail::PcDensity base;
  base.lo = dom.lower();
  base.h = span / cells;
  base.v.resize(static_cast<std::size_t>(cells));
  const auto masses =
      detail::boltzmann_cell_masses(chain.phi, chain.kBT, dom.lower(), dom.upper(), cells);
  double total = 0.0;
  for (double m : masses) total += m;
  for (int i = 0; i < cells; ++i) base.v[static_cast<std::size_t>(i)] =
      masses[static_cast<std::size_t>(i)] / (total * base.h);
  const detail::PcDensity conv = detail::pc_self_convolve(base, chain.n);
  return detail::rebin_pc(conv, grid);
}

/// F(x_N) = -kBT ln P_eq(x_N); cells whose density is below 1e-300 are marked
/// unavailable (NaN) instead of +-inf.
inline ScalarField1D end_free_energy(const ChainModel& chain, const Grid1D& grid) {
  const DensityField m = end_marginal(chain, grid);
  ScalarField1D f;
  f.g = grid;
  f.v.resize(m.v.size());
  for (std::size_t i = 0; i < m.v.size(); ++i)
    f.v[i] = m.v[i] < 1e-300 ? std::numeric_limits<double>::quiet_NaN()
                             : -chain.kBT * std::log(m.v[i]);
  return f;
}

/// Inverse-CDF sampler for the subunit extension density. The cumulative
/// table is monotone with >= 2^14 cells; draws interpolate linearly inside a
/// cell, which is exact for the tabulated (piecewise-constant) density.
class ExtensionSampler {
 public:
  explicit ExtensionSampler(const ChainModel& chain, int resolution = 1 << 14)
      : chain_(chain), lo_(chain.domain.lower()), n_(resolution) {
    chain.require_positive_temperature("ExtensionSampler");
    if (resolution < (1 << 14))
      throw ConfigError("ExtensionSampler: table resolution must be >= 2^14");
    h_ = (chain.domain.upper() - lo_) / n_;
    const auto masses =
        detail::boltzmann_cell_masses(chain.phi, chain.kBT, lo_, chain.domain.upper(), n_);
    cum_.resize(static_cast<std::size_t>(n_) + 1);
    cum_[0] = 0.0;
    for (int i = 0; i < n_; ++i) cum_[static_cast<std::size_t>(i) + 1] =
        cum_[static_cast<std::size_t>(i)] + masses[static_cast<std::size_t>(i)];
    const double total = cum_.back();
    for (auto& c : cum_) c /= total;
    cum_.back() = 1.0;
  }

  /// Quantile function of the tabulated density.
  double quantile(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    // first segment with cum[j+1] > u (skips zero-mass cells)
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    std::size_t j = it == cum_.begin() ? 0 : static_cast<std::size_t>(it - cum_.begin()) - 1;
    if (j >= static_cast<std::size_t>(n_)) j = static_cast<std::size_t>(n_) - 1;
    const double seg = cum_[j + 1] - cum_[j];
    const double frac = seg > 0 ? (u - cum_[j]) / seg : 0.0;
    return lo_ + (static_cast<double>(j) + frac) * h_;
  }

  double draw(Rng& rng) const { return quantile(rng.uniform01()); }

  /// CDF of the tabulated density (piecewise linear).
  double cdf(double x) const {
    if (x <= lo_) return 0.0;
    const double r = (x - lo_) / h_;
    if (r >= n_) return 1.0;
    const std::size_t j = static_cast<std::size_t>(r);
    const double frac = r - static_cast<double>(j);
    return cum_[j] + frac * (cum_[j + 1] - cum_[j]);
  }

  const ChainModel& chain() const { return chain_; }

 private:
  ChainModel chain_;
  double lo_, h_;
  int n_;
  std::vector<double> cum_;
};

/// Exact iid equilibrium sample of a chain configuration: N inverse-CDF draws
/// for the extensions, cumulative-summed to junctions.
inline ChainState sample_chain(const ExtensionSampler& sampler, Rng& rng) {
  std::vector<double> z(static_cast<std::size_t>(sampler.chain().n));
  for (auto& zi : z) zi = sampler.draw(rng);
  return ChainState::from_extensions(z);
}

/// Piecewise-linear CDF of a 1-D cell-averaged density.
class PiecewiseCdf {
 public:
  explicit PiecewiseCdf(const DensityField& f) : g_(f.gx) {
    if (f.dim != 1) throw Error("PiecewiseCdf: 1-D only");
    cum_.resize(f.v.size() + 1);
    cum_[0] = 0.0;
    for (std::size_t i = 0; i < f.v.size(); ++i) cum_[i + 1] = cum_[i] + f.v[i] * g_.h();
    const double total = cum_.back();
    for (auto& c : cum_) c /= total;
    cum_.back() = 1.0;
  }
  double operator()(double x) const {
    if (x <= g_.lo) return 0.0;
    const double r = (x - g_.lo) / g_.h();
    if (r >= g_.n) return 1.0;
    const std::size_t j = static_cast<std::size_t>(r);
    return cum_[j] + (r - static_cast<double>(j)) * (cum_[j + 1] - cum_[j]);
  }

 private:
  Grid1D g_;
  std::vector<double> cum_;
};

/// Kolmogorov-Smirnov statistic sup_x |F_n(x) - F(x)| against a reference CDF.
template <class Cdf>
double ks_statistic(std::vector<double> samples, const Cdf& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::abs(static_cast<double>(i) / n - f));
  }
  return d;
}

/// Mean and variance of the subunit extension under p(x), by quadrature.
struct Moments {
  double mean, var;
};
inline Moments extension_moments(const ChainModel& chain) {
  chain.require_positive_temperature("extension_moments");
  const auto& dom = chain.domain;
  const auto w = [&](double x) { return std::exp(-chain.phi.value(x) / chain.kBT); };
  const double z = integrate(w, dom.lower(), dom.upper(), 1e-12).value;
  const double m1 =
      integrate([&](double x) { return x * w(x); }, dom.lower(), dom.upper(), 1e-12).value / z;
  const double m2 =
      integrate([&](double x) { return (x - m1) * (x - m1) * w(x); }, dom.lower(), dom.upper(),
                1e-12)
          .value /
      z;
  return {m1, m2};
}

}  // namespace relent

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "relent/chain.hpp"
#include "relent/equilibrium.hpp"
#include "relent/errors.hpp"
#include "relent/grid.hpp"

namespace relent {

/// Uniform binning grid for empirical measures (m cells of width delta).
struct BinGrid {
  Grid1D g;

  static BinGrid uniform(double lo, double hi, int m) { return {Grid1D::uniform(lo, hi, m)}; }
  static BinGrid from_edges(const std::vector<double>& edges) {
    return {Grid1D::from_edges(edges)};
  }
  int m() const { return g.n; }
};

/// Discrete probability vector p_n >= 0, sum p_n = 1 (within 1e-12).
struct ProbVector {
  std::vector<double> p;

  explicit ProbVector(std::vector<double> values) : p(std::move(values)) {
    double s = 0.0;
    for (double x : p) {
      if (x < 0) throw Error("ProbVector: negative entry");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw Error("ProbVector: entries sum to " + std::to_string(s));
  }

  /// Normalizes before validating; convenient for quadrature-derived masses.
  static ProbVector normalized(std::vector<double> values) {
    double s = std::accumulate(values.begin(), values.end(), 0.0);
    if (!(s > 0)) throw Error("ProbVector: cannot normalize non-positive mass");
    for (double& x : values) x /= s;
    return ProbVector(std::move(values));
  }

  std::size_t size() const { return p.size(); }
};

/// Occupancy fractions nu_n of the N subunit extensions over a bin grid.
/// Each N*nu_n is an integer count.
struct EmpiricalMeasure {
  BinGrid bins;
  std::vector<double> nu;
  long long n_samples;

  std::vector<long long> counts() const {
    std::vector<long long> c(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) {
      const double raw = nu[i] * static_cast<double>(n_samples);
      const long long r = std::llround(raw);
      if (std::abs(raw - static_cast<double>(r)) > 1e-6)
        throw NonIntegerCounts("empirical measure: N*nu[" + std::to_string(i) +
                               "] = " + std::to_string(raw) + " is not an integer");
      c[i] = r;
    }
    return c;
  }

  ProbVector prob_vector() const { return ProbVector(nu); }
};

/// Bins the extensions of one chain configuration: nu_n = count_n / N.
/// Throws OutOfRange listing any extension outside the grid.
inline EmpiricalMeasure empirical_measure(const ChainState& state, const BinGrid& bins) {
  std::vector<long long> counts(static_cast<std::size_t>(bins.m()), 0);
  std::ostringstream bad;
  int n_bad = 0;
  for (double z : state.extensions()) {
    const int i = bins.g.locate(z);
    if (i < 0) {
      if (n_bad++ < 8) bad << (n_bad > 1 ? ", " : "") << z;
      continue;
    }
    ++counts[static_cast<std::size_t>(i)];
  }
  if (n_bad > 0)
    throw OutOfRange(std::to_string(n_bad) + " extension(s) outside bin range: " + bad.str());
  EmpiricalMeasure mu{bins, std::vector<double>(counts.size()), state.n()};
  for (std::size_t i = 0; i < counts.size(); ++i)
    mu.nu[i] = static_cast<double>(counts[i]) / static_cast<double>(state.n());
  return mu;
}

/// Expected bin masses p_n = integral of p(x) over each bin. The bins must
/// cover the coordinate domain up to tail mass 1e-9.
inline ProbVector bin_probabilities(const ChainModel& chain, const BinGrid& bins) {
  chain.require_positive_temperature("bin_probabilities");
  const auto& dom = chain.domain;
  const auto w = [&](double x) { return std::exp(-chain.phi.value(x) / chain.kBT); };
  const double z = subunit_partition(chain.phi, chain.kBT, dom);
  std::vector<double> p(static_cast<std::size_t>(bins.m()), 0.0);
  double covered = 0.0;
  for (int i = 0; i < bins.m(); ++i) {
    const double a = std::max(bins.g.edge(i), dom.lower());
    const double b = std::min(bins.g.edge(i + 1), dom.upper());
    if (b > a) p[static_cast<std::size_t>(i)] = integrate(w, a, b, 1e-10, 1e-300).value / z;
    covered += p[static_cast<std::size_t>(i)];
  }
  if (1.0 - covered > 1e-9)
    throw GridTooCoarse("bin grid misses " + std::to_string(1.0 - covered) +
                        " of the extension density mass");
  return ProbVector::normalized(std::move(p));
}

/// S = -sum p_n ln p_n (nats), with 0 ln 0 = 0.
inline double gibbs_entropy(const ProbVector& p) {
  double s = 0.0;
  for (double x : p.p)
    if (x > 0) s -= x * std::log(x);
  return s;
}

/// H[nu|p] = sum nu_n ln(nu_n/p_n) (nats); +inf when nu puts mass where p has
/// none (a legitimate outcome, not an error).
inline double relative_entropy(const ProbVector& nu, const ProbVector& p) {
  if (nu.size() != p.size()) throw LengthMismatch("relative_entropy: length mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu.p[i] == 0) continue;
    if (p.p[i] == 0) return std::numeric_limits<double>::infinity();
    h += nu.p[i] * std::log(nu.p[i] / p.p[i]);
  }
  return h;
}

/// ln P(nu) for nu ~ Multinomial(N, p), via log-gamma.
inline double multinomial_log_prob(const EmpiricalMeasure& mu, const ProbVector& p) {
  if (mu.nu.size() != p.size()) throw LengthMismatch("multinomial_log_prob: length mismatch");
  const auto counts = mu.counts();
  const double n = static_cast<double>(mu.n_samples);
  double lp = std::lgamma(n + 1.0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double k = static_cast<double>(counts[i]);
    lp -= std::lgamma(k + 1.0);
    if (counts[i] > 0) {
      if (p.p[i] == 0) return -std::numeric_limits<double>::infinity();
      lp += k * std::log(p.p[i]);
    }
  }
  return lp;
}

/// Free energy of an empirical-measure fluctuation: dF = N kBT H[nu|p].
inline double fluctuation_free_energy(const EmpiricalMeasure& mu, const ProbVector& p,
                                      double kBT) {
  return static_cast<double>(mu.n_samples) * kBT * relative_entropy(mu.prob_vector(), p);
}

/// Integer composition of N closest to N*p by largest-remainder rounding
/// (ties resolved toward the lower index).
inline std::vector<long long> largest_remainder_counts(const ProbVector& p, long long n) {
  const std::size_t m = p.size();
  std::vector<long long> c(m);
  std::vector<std::pair<double, std::size_t>> rem(m);
  long long assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double target = p.p[i] * static_cast<double>(n);
    c[i] = static_cast<long long>(std::floor(target));
    assigned += c[i];
    rem[i] = {target - std::floor(target), i};
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;  // stable: ties keep lower index first
  });
  for (long long k = 0; k < n - assigned; ++k) ++c[rem[static_cast<std::size_t>(k)].second];
  return c;
}

struct SanovGap {
  double exact;     // -kBT [ln P(nu) - ln P(p_hat)]
  double stirling;  // N kBT H[nu|p]
  double gap;       // exact - stirling
};

/// Deterministic reference composition for Stirling-convergence sweeps: the
/// expected bin masses restricted to their well-populated cells (p_n above
/// floor_frac of the largest mass), power-tilted (p_n^alpha) and renormalized.
/// Holding one clearly tilted composition fixed across chain sizes isolates
/// the O(m ln N) Stirling error from sampling noise, which is what the
/// per-subunit gap bound is about.
inline ProbVector sweep_composition(const ProbVector& p, double floor_frac = 0.01,
                                    double alpha = 0.8) {
  double pmax = 0.0;
  for (double x : p.p) pmax = std::max(pmax, x);
  std::vector<double> v(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.p[i] >= floor_frac * pmax) v[i] = std::pow(p.p[i], alpha);
  return ProbVector::normalized(std::move(v));
}

/// Empirical measure with occupancies nu scaled to N subunits by
/// largest-remainder rounding.
inline EmpiricalMeasure scale_composition(const BinGrid& bins, const ProbVector& nu,
                                          long long n) {
  const auto counts = largest_remainder_counts(nu, n);
  EmpiricalMeasure mu{bins, std::vector<double>(counts.size()), n};
  for (std::size_t i = 0; i < counts.size(); ++i)
    mu.nu[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  return mu;
}

/// Compares the exact multinomial free-energy difference against its Stirling
/// (relative-entropy) form. The reference composition p_hat is the rounded
/// integer version of N*p, so the exact leg is a true multinomial probability.
inline SanovGap sanov_gap(const EmpiricalMeasure& mu, const ProbVector& p, double kBT) {
  const auto ref_counts = largest_remainder_counts(p, mu.n_samples);
  EmpiricalMeasure ref{mu.bins, std::vector<double>(ref_counts.size()), mu.n_samples};
  for (std::size_t i = 0; i < ref_counts.size(); ++i)
    ref.nu[i] = static_cast<double>(ref_counts[i]) / static_cast<double>(mu.n_samples);
  const double exact = -kBT * (multinomial_log_prob(mu, p) - multinomial_log_prob(ref, p));
  const double stirling = fluctuation_free_energy(mu, p, kBT);
  return {exact, stirling, exact - stirling};
}

}  // namespace relent

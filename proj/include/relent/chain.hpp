#pragma once

#include <string>
#include <vector>

#include "relent/errors.hpp"
#include "relent/potential.hpp"

namespace relent {

/// N-subunit chain at temperature kBT with friction eta, anchored at x_0 = 0.
/// kBT = 0 is admitted for noise-free dynamics; equilibrium and thermodynamic
/// operations require kBT > 0 and throw otherwise.
struct ChainModel {
  int n;
  Potential phi;
  double kBT;
  double eta;
  CoordinateDomain domain;

  ChainModel(int n_, Potential phi_, double kBT_, double eta_, CoordinateDomain dom)
      : n(n_), phi(phi_), kBT(kBT_), eta(eta_), domain(dom) {
    if (n < 1) throw ConfigError("chain: N must be >= 1");
    if (kBT < 0) throw ConfigError("chain: kBT must be non-negative");
    if (!(eta > 0)) throw ConfigError("chain: eta must be positive");
    if (!(dom.cutoff > 0)) throw ConfigError("chain: domain cutoff must be positive");
  }

  void require_positive_temperature(const char* op) const {
    if (!(kBT > 0)) throw ConfigError(std::string(op) + ": kBT must be positive");
  }
};

/// Junction positions (x_1, ..., x_N) of one chain configuration; x_0 = 0.
struct ChainState {
  std::vector<double> junctions;
  double time = 0.0;

  int n() const { return static_cast<int>(junctions.size()); }

  /// Subunit extensions z_k = x_k - x_{k-1}.
  std::vector<double> extensions() const {
    std::vector<double> z(junctions.size());
    double prev = 0.0;
    for (std::size_t k = 0; k < junctions.size(); ++k) {
      z[k] = junctions[k] - prev;
      prev = junctions[k];
    }
    return z;
  }

  /// Rebuild junctions from extensions by cumulative sum.
  static ChainState from_extensions(const std::vector<double>& z, double time = 0.0) {
    ChainState s;
    s.junctions.resize(z.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      acc += z[k];
      s.junctions[k] = acc;
    }
    s.time = time;
    return s;
  }
};

/// Throws DomainViolation unless every extension lies in the chain's domain.
inline void check_state_domain(const ChainModel& chain, const ChainState& state) {
  if (state.n() != chain.n)
    throw LengthMismatch("state has " + std::to_string(state.n()) + " junctions, chain expects " +
                         std::to_string(chain.n));
  double prev = 0.0;
  for (int k = 0; k < state.n(); ++k) {
    const double z = state.junctions[k] - prev;
    if (!chain.domain.contains(z))
      throw DomainViolation("extension " + std::to_string(k) + " = " + std::to_string(z) +
                            " outside coordinate domain");
    prev = state.junctions[k];
  }
}

}  // namespace relent

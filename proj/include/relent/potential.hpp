#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "relent/errors.hpp"
#include "relent/quadrature.hpp"

namespace relent {

/// phi(x) = k/2 (x - x0)^2
struct Harmonic {
  double k;
  double x0;
  double value(double x) const {
    const double d = x - x0;
    return 0.5 * k * d * d;
  }
  double grad(double x) const { return k * (x - x0); }
};

/// phi(x) = a (x - c)^4 - b (x - c)^2, wells at c +- sqrt(b / 2a).
struct DoubleWell {
  double a;
  double b;
  double c;
  double value(double x) const {
    const double d = x - c;
    const double d2 = d * d;
    return a * d2 * d2 - b * d2;
  }
  double grad(double x) const {
    const double d = x - c;
    return 4.0 * a * d * d * d - 2.0 * b * d;
  }
  double well_offset() const { return std::sqrt(b / (2.0 * a)); }
};

/// Harmonic well plus an exponential repulsion near x = 0 (unit decay length),
/// for half-line use: phi(x) = k/2 (x - x0)^2 + w e^{-x}.
struct SoftWallHarmonic {
  double k;
  double x0;
  double w;
  double value(double x) const {
    const double d = x - x0;
    return 0.5 * k * d * d + w * std::exp(-x);
  }
  double grad(double x) const { return k * (x - x0) - w * std::exp(-x); }
};

/// Closed-form subunit free-energy function phi(x). Immutable after
/// construction; all stiffness/strength parameters must be strictly positive
/// so the potential confines (phi -> +inf as x -> +inf).
class Potential {
 public:
  static Potential harmonic(double k, double x0) {
    require_positive(k, "harmonic.k");
    return Potential(Harmonic{k, x0});
  }
  static Potential double_well(double a, double b, double c) {
    require_positive(a, "double_well.a");
    require_positive(b, "double_well.b");
    return Potential(DoubleWell{a, b, c});
  }
  static Potential soft_wall(double k, double x0, double wall_strength) {
    require_positive(k, "soft_wall.k");
    require_positive(wall_strength, "soft_wall.wall_strength");
    return Potential(SoftWallHarmonic{k, x0, wall_strength});
  }

  double value(double x) const {
    return std::visit([x](const auto& p) { return p.value(x); }, v_);
  }
  double grad(double x) const {
    return std::visit([x](const auto& p) { return p.grad(x); }, v_);
  }

  /// Rightmost / leftmost potential minimum; anchors for tail scans.
  double rightmost_min() const {
    if (const auto* h = std::get_if<Harmonic>(&v_)) return h->x0;
    if (const auto* d = std::get_if<DoubleWell>(&v_)) return d->c + d->well_offset();
    const auto& s = std::get<SoftWallHarmonic>(v_);
    return std::max(s.x0, 0.0) + 1.0;  // wall pushes the minimum right of x0
  }
  double leftmost_min() const {
    if (const auto* h = std::get_if<Harmonic>(&v_)) return h->x0;
    if (const auto* d = std::get_if<DoubleWell>(&v_)) return d->c - d->well_offset();
    return std::get<SoftWallHarmonic>(v_).x0;
  }

  /// Characteristic length used for scan steps and finite-difference steps.
  double scale() const {
    if (const auto* h = std::get_if<Harmonic>(&v_)) return 1.0 / std::sqrt(h->k);
    if (const auto* d = std::get_if<DoubleWell>(&v_))
      return d->well_offset() + 1.0 / std::pow(4.0 * d->a, 0.25);
    return 1.0 / std::sqrt(std::get<SoftWallHarmonic>(v_).k) + 1.0;
  }

  const char* name() const {
    if (std::holds_alternative<Harmonic>(v_)) return "harmonic";
    if (std::holds_alternative<DoubleWell>(v_)) return "double_well";
    return "soft_wall";
  }

  std::vector<std::pair<std::string, double>> params() const {
    if (const auto* h = std::get_if<Harmonic>(&v_))
      return {{"k", h->k}, {"x0", h->x0}};
    if (const auto* d = std::get_if<DoubleWell>(&v_))
      return {{"a", d->a}, {"b", d->b}, {"c", d->c}};
    const auto& s = std::get<SoftWallHarmonic>(v_);
    return {{"k", s.k}, {"x0", s.x0}, {"wall_strength", s.w}};
  }

 private:
  template <class V>
  explicit Potential(V v) : v_(std::move(v)) {}
  static void require_positive(double x, const char* what) {
    if (!(x > 0)) throw ConfigError(std::string(what) + " must be strictly positive");
  }
  std::variant<Harmonic, DoubleWell, SoftWallHarmonic> v_;
};

/// Integration range for subunit extensions. HalfLine is [0, cutoff]; FullLine
/// is [-cutoff, cutoff]. The cutoff must leave Boltzmann tail mass < 1e-12.
struct CoordinateDomain {
  enum class Kind { HalfLine, FullLine };
  Kind kind = Kind::HalfLine;
  double cutoff = 0.0;

  double lower() const { return kind == Kind::HalfLine ? 0.0 : -cutoff; }
  double upper() const { return cutoff; }
  bool contains(double x) const { return x >= lower() && x <= upper(); }
};

namespace detail {

/// Scan outward from `from` in direction `dir` until phi rose by `drop` above
/// the starting value, then bisect to land near the crossing.
inline double scan_rise(const Potential& phi, double from, double dir, double drop) {
  const double base = phi.value(from);
  double step = std::max(phi.scale(), 1e-3);
  double x = from;
  while (phi.value(x + dir * step) - base < drop) {
    x += dir * step;
    step *= 2.0;
    if (step > 1e12) throw NonConvergent("cutoff scan: potential does not confine");
  }
  double loq = x, hiq = x + dir * step;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (loq + hiq);
    (phi.value(mid) - base < drop ? loq : hiq) = mid;
  }
  return hiq;
}

}  // namespace detail

/// Chooses a truncation point with Boltzmann tail mass below ~1e-13 of the
/// total: walks out to where phi exceeds the lowest minimum by 45 kBT.
inline CoordinateDomain auto_domain(const Potential& phi, double kBT,
                                    CoordinateDomain::Kind kind) {
  if (!(kBT > 0)) throw ConfigError("auto_domain: kBT must be positive");
  const double drop = 45.0 * kBT;
  double anchor = phi.rightmost_min();
  if (kind == CoordinateDomain::Kind::HalfLine) anchor = std::max(anchor, 0.0);
  double cutoff = std::abs(detail::scan_rise(phi, anchor, +1.0, drop));
  if (kind == CoordinateDomain::Kind::FullLine) {
    const double left = std::abs(detail::scan_rise(phi, phi.leftmost_min(), -1.0, drop));
    cutoff = std::max(cutoff, left);
  }
  return {kind, cutoff};
}

/// z = integral over the domain of exp(-phi(x)/kBT), adaptive quadrature to
/// relative error < 1e-10. Throws NonConvergent if the budget is exhausted.
inline double subunit_partition(const Potential& phi, double kBT,
                                const CoordinateDomain& domain, double rel_tol = 1e-11) {
  if (!(kBT > 0)) throw ConfigError("subunit_partition: kBT must be positive");
  const auto f = [&](double x) { return std::exp(-phi.value(x) / kBT); };
  return integrate(f, domain.lower(), domain.upper(), rel_tol).value;
}

/// Verifies the CoordinateDomain tail-mass invariant: mass of exp(-phi/kBT)
/// beyond the cutoff must be below 1e-12 of the total.
inline bool domain_tail_ok(const Potential& phi, double kBT, const CoordinateDomain& domain) {
  const auto f = [&](double x) { return std::exp(-phi.value(x) / kBT); };
  const double z = subunit_partition(phi, kBT, domain);
  const double span = domain.upper() - domain.lower();
  double tail = integrate(f, domain.upper(), domain.upper() + span + 10.0, 1e-6, 1e-300).value;
  if (domain.kind == CoordinateDomain::Kind::FullLine)
    tail += integrate(f, domain.lower() - span - 10.0, domain.lower(), 1e-6, 1e-300).value;
  return tail < 1e-12 * z;
}

}  // namespace relent

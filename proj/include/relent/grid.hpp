#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "relent/errors.hpp"

namespace relent {

/// Uniform 1-D cell grid: n cells between lo and hi.
struct Grid1D {
  double lo = 0.0;
  double hi = 1.0;
  int n = 1;

  static Grid1D uniform(double lo, double hi, int n) {
    if (!(hi > lo)) throw ConfigError("grid: hi must exceed lo");
    if (n < 1) throw ConfigError("grid: need at least one cell");
    return {lo, hi, n};
  }

  /// Build from explicit edges; enforces uniform spacing to 1e-12 relative.
  static Grid1D from_edges(const std::vector<double>& edges) {
    if (edges.size() < 2) throw ConfigError("grid: need at least two edges");
    const double h = edges[1] - edges[0];
    if (!(h > 0)) throw ConfigError("grid: edges must be strictly increasing");
    for (std::size_t i = 1; i + 1 < edges.size(); ++i) {
      const double hi_ = edges[i + 1] - edges[i];
      if (!(hi_ > 0)) throw ConfigError("grid: edges must be strictly increasing");
      if (std::abs(hi_ - h) > 1e-12 * std::abs(h))
        throw ConfigError("grid: non-uniform spacing at edge " + std::to_string(i));
    }
    return {edges.front(), edges.back(), static_cast<int>(edges.size()) - 1};
  }

  double h() const { return (hi - lo) / n; }
  double edge(int i) const { return lo + i * h(); }
  double center(int i) const { return lo + (i + 0.5) * h(); }

  /// Cell index of x under half-open convention [e_i, e_{i+1}); x == hi maps
  /// to the last cell. Returns -1 outside [lo, hi].
  int locate(double x) const {
    if (x < lo || x > hi) return -1;
    int i = static_cast<int>((x - lo) / h());
    if (i >= n) i = n - 1;
    return i;
  }

  bool operator==(const Grid1D& o) const { return lo == o.lo && hi == o.hi && n == o.n; }
};

struct Grid2D {
  Grid1D x, y;
  double cell_volume() const { return x.h() * y.h(); }
  std::size_t cells() const { return static_cast<std::size_t>(x.n) * y.n; }
  bool operator==(const Grid2D& o) const { return x == o.x && y == o.y; }
};

/// Cell-averaged probability density on a uniform rectangular grid (1-D or 2-D).
/// Values are densities (not masses): sum(v_i * cell_volume) == 1.
struct DensityField {
  int dim = 1;
  Grid1D gx;
  Grid1D gy;  // unused when dim == 1
  std::vector<double> v;

  static DensityField zeros(const Grid1D& g) {
    DensityField f;
    f.dim = 1;
    f.gx = g;
    f.v.assign(static_cast<std::size_t>(g.n), 0.0);
    return f;
  }
  static DensityField zeros(const Grid2D& g) {
    DensityField f;
    f.dim = 2;
    f.gx = g.x;
    f.gy = g.y;
    f.v.assign(g.cells(), 0.0);
    return f;
  }

  double cell_volume() const { return dim == 1 ? gx.h() : gx.h() * gy.h(); }
  std::size_t cells() const { return v.size(); }

  double& at(int i) { return v[static_cast<std::size_t>(i)]; }
  double at(int i) const { return v[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * gy.n + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * gy.n + j]; }

  double mass() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s * cell_volume();
  }

  void normalize() {
    const double m = mass();
    if (!(m > 0)) throw Error("density: cannot normalize zero/negative mass");
    const double inv = 1.0 / m;
    for (double& x : v) x *= inv;
  }

  /// Checks the type invariants: non-negative values, unit mass within tol.
  void validate(double tol = 1e-9) const {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] < 0)
        throw NegativeDensity("density: negative value at cell " + std::to_string(i));
    const double m = mass();
    if (std::abs(m - 1.0) > tol)
      throw Error("density: mass " + std::to_string(m) + " deviates from 1");
  }
};

/// L1 distance between two densities on the same grid.
inline double l1_distance(const DensityField& a, const DensityField& b) {
  if (a.dim != b.dim || a.v.size() != b.v.size() || !(a.gx == b.gx) ||
      (a.dim == 2 && !(a.gy == b.gy)))
    throw LengthMismatch("l1_distance: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += std::abs(a.v[i] - b.v[i]);
  return s * a.cell_volume();
}

/// Mean of a 1-D density (cell-center quadrature).
inline double field_mean(const DensityField& f) {
  if (f.dim != 1) throw Error("field_mean: 1-D only");
  double s = 0.0;
  for (int i = 0; i < f.gx.n; ++i) s += f.gx.center(i) * f.at(i);
  return s * f.gx.h();
}

inline double field_variance(const DensityField& f) {
  if (f.dim != 1) throw Error("field_variance: 1-D only");
  const double mu = field_mean(f);
  double s = 0.0;
  for (int i = 0; i < f.gx.n; ++i) {
    const double d = f.gx.center(i) - mu;
    s += d * d * f.at(i);
  }
  return s * f.gx.h();
}

}  // namespace relent

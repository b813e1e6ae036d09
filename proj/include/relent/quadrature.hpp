#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "relent/errors.hpp"

namespace relent {
namespace quad {

// Gauss-Kronrod 7-15 pair on [-1,1].
inline constexpr double kNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0,
};
inline constexpr double kWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
};
// Gauss-7 weights attach to kronrod nodes 1, 3, 5, 7.
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
};

struct Segment {
  double a, b, integral, err;
};

/// One G7K15 evaluation on [a,b]; returns {kronrod value, |K15-G7| error estimate}.
/// Odd-index nodes (and the center) form the embedded Gauss-7 rule.
template <class F>
Segment gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double hl = 0.5 * (b - a);
  double k15 = 0.0, g7 = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double fx =
        (i == 7) ? f(c) : f(c - hl * kNodes[i]) + f(c + hl * kNodes[i]);
    k15 += kWeights[i] * fx;
    if (i % 2 == 1) g7 += kGaussWeights[i / 2] * fx;
  }
  return {a, b, k15 * hl, std::abs((k15 - g7) * hl)};
}

}  // namespace quad

struct QuadResult {
  double value;
  double error;
  int evaluations;
};

/// Adaptive Gauss-Kronrod integration of f over [a,b].
/// Splits the worst segment until the summed error estimate meets
/// max(rel_tol*|I|, abs_tol) or the segment budget is exhausted (NonConvergent).
template <class F>
QuadResult integrate(F&& f, double a, double b, double rel_tol = 1e-12,
                     double abs_tol = 0.0, int max_segments = 2000) {
  std::vector<quad::Segment> segs;
  segs.push_back(quad::gk15(f, a, b));
  int evals = 15;
  for (;;) {
    double total = 0.0, err = 0.0;
    for (const auto& s : segs) {
      total += s.integral;
      err += s.err;
    }
    if (err <= std::max(rel_tol * std::abs(total), abs_tol))
      return {total, err, evals};
    if (static_cast<int>(segs.size()) >= max_segments)
      throw NonConvergent("adaptive quadrature: error " + std::to_string(err) +
                          " above tolerance after " + std::to_string(segs.size()) +
                          " segments");
    auto worst = std::max_element(
        segs.begin(), segs.end(),
        [](const quad::Segment& l, const quad::Segment& r) { return l.err < r.err; });
    const double wa = worst->a, wb = worst->b;
    const double mid = 0.5 * (wa + wb);
    *worst = quad::gk15(f, wa, mid);
    segs.push_back(quad::gk15(f, mid, wb));
    evals += 30;
  }
}

/// Single fixed G7K15 panel (no adaptivity); used for per-cell averages on
/// fine grids where the panel error is already negligible.
template <class F>
double integrate_panel(F&& f, double a, double b) {
  return quad::gk15(f, a, b).integral;
}

}  // namespace relent

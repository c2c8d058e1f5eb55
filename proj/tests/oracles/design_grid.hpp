#pragma once

// Reference design optimizer: minimize both bound expressions over a
// budget-feasible (t, n) grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace oracle {

struct DesignPrimitives {
  double B0, cn, ct, m0, sigma0;
  double v_x, v_xa, A0, C0;
};

inline double augmented_bound(const DesignPrimitives& p, double n, double t) {
  return p.A0 * std::sqrt(p.v_xa / n) + p.C0 * p.m0 / std::sqrt(t);
}

inline double cb_bound(const DesignPrimitives& p, double n) { return p.A0 * std::sqrt(p.v_x / n) + p.sigma0; }

struct GridOptimum {
  bool augmented = false;
  double value = 0.0;
  double augmented_min = std::numeric_limits<double>::infinity();
  double cb_value = 0.0;
  double n = 0.0;
  double t = 0.0;
  double dn = 0.0;
  double dt = 0.0;
};

/// `points` values of t over (0, B0/ct) and of n over (0, B0/cn]; for each t
/// the largest n on the grid that keeps cn n + ct t <= B0.
inline GridOptimum grid_minimize(const DesignPrimitives& p, std::size_t points = 500) {
  GridOptimum g;
  g.dt = p.B0 / p.ct / static_cast<double>(points + 1);
  g.dn = p.B0 / p.cn / static_cast<double>(points);
  for (std::size_t i = 1; i <= points; ++i) {
    const double t = g.dt * static_cast<double>(i);
    const double n_max = (p.B0 - p.ct * t) / p.cn;
    const double j = std::floor(n_max / g.dn * (1.0 + 1e-15));
    if (j < 1.0) continue;
    const double n = std::min(j * g.dn, n_max);
    const double v = augmented_bound(p, n, t);
    if (v < g.augmented_min) {
      g.augmented_min = v;
      g.n = n;
      g.t = t;
    }
  }
  g.cb_value = cb_bound(p, p.B0 / p.cn);
  g.augmented = g.augmented_min < g.cb_value;
  g.value = std::min(g.augmented_min, g.cb_value);
  return g;
}

/// Gradient magnitude of the augmented bound at (n, t).
inline double resolution_tolerance(const DesignPrimitives& p, double n, double t, double dn, double dt) {
  const double dv_dn = 0.5 * p.A0 * std::sqrt(p.v_xa) * std::pow(n, -1.5);
  const double dv_dt = 0.5 * p.C0 * p.m0 * std::pow(t, -1.5);
  return 1.5 * (dv_dn * dn + dv_dt * dt);
}

}  // namespace oracle

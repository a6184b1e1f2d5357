#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace scflow::oracle {

/// Constant-height flow on the exp-warp preset with f = e^{-(x^0 - 1)}
/// reduces to y' = -(1 - e^{-y}) for y = u - 1.
inline double height_rate(double u) { return -(1.0 - std::exp(-(u - 1.0))); }

/// Closed-form solution of y' = -(1 - e^{-y}): e^y - 1 decays like e^{-t}.
inline double height_closed_form(double u0, double t) {
  return 1.0 + std::log1p(std::expm1(u0 - 1.0) * std::exp(-t));
}

/// Classical RK4 for u' = height_rate(u); a second route to the same curve.
inline double height_rk4(double u0, double t, int steps) {
  const double h = t / steps;
  double u = u0;
  for (int i = 0; i < steps; ++i) {
    const double k1 = height_rate(u);
    const double k2 = height_rate(u + 0.5 * h * k1);
    const double k3 = height_rate(u + 0.5 * h * k2);
    const double k4 = height_rate(u + h * k3);
    u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

/// One forward-Euler, SSPRK3 or s-stage SSPRK2 step of the height ODE, for
/// comparing single PDE steps on constant data.
inline double height_euler_step(double u, double dt) { return u + dt * height_rate(u); }

inline double height_ssprk3_step(double u, double dt) {
  const double u1 = u + dt * height_rate(u);
  const double u2 = 0.75 * u + 0.25 * (u1 + dt * height_rate(u1));
  return u / 3.0 + 2.0 / 3.0 * (u2 + dt * height_rate(u2));
}

inline double height_ssprk2_step(double u, double dt, int stages) {
  const double h = dt / (stages - 1);
  double w = u;
  for (int i = 1; i < stages; ++i) w += h * height_rate(w);
  return u / stages + (stages - 1.0) / stages * (w + h * height_rate(w));
}

/// Sum over all k-subsets of the product of their entries.
inline double subset_sum(const std::vector<double>& x, int k) {
  const int n = static_cast<int>(x.size());
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) p *= x[i];
    }
    total += p;
  }
  return total;
}

/// H_2 as the pairwise sum, written out directly.
inline double pairwise_h2(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) s += x[i] * x[j];
  return s;
}

inline bool in_gamma2(const std::vector<double>& x) {
  double h = 0.0;
  for (double v : x) h += v;
  return h > 0.0 && pairwise_h2(x) > 0.0;
}

/// Central-difference gradient.
inline std::vector<double> central_gradient(const std::function<double(const std::vector<double>&)>& fn,
                                            const std::vector<double>& x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> p = x, m = x;
    p[i] += step;
    m[i] -= step;
    g[i] = (fn(p) - fn(m)) / (2.0 * step);
  }
  return g;
}

/// Curvature of the curve x^0 = u(x^1) in 2-D Minkowski space with respect
/// to the past-directed unit normal.
inline double minkowski_curve_curvature(double slope, double second) {
  return -second / std::pow(1.0 - slope * slope, 1.5);
}

/// Rejection sampler for Gamma_2 in a box [-scale, scale]^n, with a positive
/// shift so the cone is hit often.
inline std::vector<double> random_gamma2(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> box(-scale, scale);
  std::uniform_real_distribution<double> lift(0.0, scale);
  std::vector<double> x(n);
  for (;;) {
    const double shift = lift(rng);
    for (double& v : x) v = box(rng) + shift;
    if (in_gamma2(x)) return x;
  }
}

}  // namespace scflow::oracle

#include "verify.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "scflow/ambient.hpp"
#include "scflow/curvature.hpp"
#include "scflow/errors.hpp"
#include "scflow/grid.hpp"
#include "scflow/prescribe.hpp"
#include "scflow/surface.hpp"

namespace scflow::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Accumulates one VerifyRow.
class Tally {
 public:
  Tally(std::string suite, std::string item) {
    row_.suite = std::move(suite);
    row_.item = std::move(item);
    row_.worst_margin = kInf;
  }

  /// Records a sample with slack `margin`; passes when `ok`.
  void record(bool ok, double margin) {
    ++row_.samples;
    if (!ok) ++row_.failures;
    row_.worst_margin = std::min(row_.worst_margin, margin);
  }
  void record(double margin) { record(margin >= 0.0, margin); }

  void set_value(double v) { row_.value = v; }
  void track_max(double v) { row_.value = std::max(row_.value, v); }

  VerifyRow finish() const {
    VerifyRow r = row_;
    if (r.worst_margin == kInf) r.worst_margin = 0.0;
    return r;
  }

 private:
  VerifyRow row_;
};

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random vector in Gamma_2 drawn from a mix of scales, near-umbilic points,
/// points with negative entries and points close to the cone boundary.
std::vector<double> sample_gamma2(Rng& rng, int n) {
  std::vector<double> kappa(n);
  for (;;) {
    const double scale = std::pow(10.0, uniform(rng, -2.0, 2.0));
    const int mode = static_cast<int>(rng() % 4);
    if (mode == 0) {
      for (double& k : kappa) k = scale * uniform(rng, -1.0, 1.0);
    } else if (mode == 1) {
      const double c = scale * uniform(rng, 0.1, 1.0);
      for (double& k : kappa) k = c * (1.0 + 1e-8 * uniform(rng, -1.0, 1.0));
    } else if (mode == 2) {
      for (double& k : kappa) k = scale * uniform(rng, 0.0, 1.0);
      kappa[rng() % n] = -scale * uniform(rng, 0.0, 0.5);
    } else {
      // Shrink a positive direction toward the boundary of the cone.
      for (double& k : kappa) k = scale * uniform(rng, -1.0, 1.0);
      const double shift = scale * uniform(rng, 0.0, 1.0);
      for (double& k : kappa) k += shift;
    }
    if (gamma_k_member(kappa, 2)) return kappa;
  }
}

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double sigma2_of(const std::vector<double>& kappa) { return std::sqrt(h_k(kappa, 2)); }

/// Brute-force H_k over all k-subsets (bitmask enumeration).
double subset_sum(std::span<const double> kappa, int k) {
  const int n = static_cast<int>(kappa.size());
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    double product = 1.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) product *= kappa[i];
    }
    total += product;
  }
  return total;
}

void curvature_battery(Rng& rng, std::size_t samples, std::vector<VerifyRow>& rows) {
  std::array<Tally, 7> items = {
      Tally("curvature", "battery_a"), Tally("curvature", "battery_b"),
      Tally("curvature", "battery_c"), Tally("curvature", "battery_d"),
      Tally("curvature", "battery_e"), Tally("curvature", "battery_f"),
      Tally("curvature", "battery_g")};
  Tally concavity("curvature", "concavity");
  Tally gradient("curvature", "grad_sigma2_fd");

  for (int n : {2, 3, 5}) {
    for (std::size_t s = 0; s < samples; ++s) {
      const std::vector<double> kappa = sample_gamma2(rng, n);
      const BatteryReport report = inequality_battery(kappa);
      for (std::size_t i = 0; i < items.size(); ++i) {
        const BatteryItem& it = report.items[i];
        if (!it.applicable) continue;
        items[i].record(it.passed, it.margin);
      }

      // (g) on unrestricted vectors as well.
      std::vector<double> any(n);
      for (double& k : any) k = uniform(rng, -1.0, 1.0);
      const BatteryReport unrestricted = inequality_battery(any);
      items[6].record(unrestricted.items[6].passed, unrestricted.items[6].margin);

      const std::vector<double> other = sample_gamma2(rng, n);
      const double t = uniform(rng, 0.0, 1.0);
      std::vector<double> mid(n);
      for (int i = 0; i < n; ++i) mid[i] = t * kappa[i] + (1.0 - t) * other[i];
      const double slack = sigma2_of(mid) - (t * sigma2_of(kappa) + (1.0 - t) * sigma2_of(other));
      concavity.record(concavity_probe(kappa, other, t), slack);

      // Fourth-order central differences with a step small against the
      // distance to the cone boundary.
      const std::vector<double> grad = grad_sigma2(kappa);
      const double h2 = h_k(kappa, 2);
      const std::vector<double> dh2 = grad_h2(kappa);
      const double step = 1e-3 * h2 / max_abs(dh2);
      double worst = 0.0;
      for (int i = 0; i < n; ++i) {
        auto at = [&](double d) {
          std::vector<double> p = kappa;
          p[i] += d;
          return sigma2_of(p);
        };
        const double fd =
            (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
        worst = std::max(worst, std::abs(fd - grad[i]));
      }
      const double rel = worst / max_abs(grad);
      gradient.record(1e-6 - rel);
      gradient.track_max(rel);
    }
  }
  for (const Tally& t : items) rows.push_back(t.finish());
  rows.push_back(concavity.finish());
  rows.push_back(gradient.finish());
}

void curvature_enumeration(Rng& rng, std::size_t samples, std::vector<VerifyRow>& rows) {
  Tally exact("curvature", "h_k_bruteforce");
  Tally perm("curvature", "permutation_invariance");
  const std::size_t per_n = std::max<std::size_t>(1, samples / 8);
  for (int n = 1; n <= 8; ++n) {
    for (std::size_t s = 0; s < per_n; ++s) {
      // Small integers keep every partial sum exact in double precision.
      std::vector<double> kappa(n);
      for (double& k : kappa) k = static_cast<double>(static_cast<int>(rng() % 19) - 9);
      for (int k = 1; k <= n; ++k) {
        const double expected = subset_sum(kappa, k);
        const double got = h_k(kappa, k);
        exact.record(got == expected, 0.0 - std::abs(got - expected));
      }

      std::vector<double> real(n), shuffled;
      for (double& k : real) k = uniform(rng, -2.0, 2.0);
      shuffled = real;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (int k = 1; k <= n; ++k) {
        const double a = h_k(real, k), b = h_k(shuffled, k);
        perm.record(a == b, 0.0 - std::abs(a - b));
      }
    }
  }
  rows.push_back(exact.finish());
  rows.push_back(perm.finish());
}

/// sigma_2 of the eigenvalues of a symmetric matrix.
double sigma2_matrix(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  return std::sqrt(h_k(std::span<const double>(ev.data(), ev.size()), 2));
}

void curvature_hessian(Rng& rng, std::size_t samples, std::vector<VerifyRow>& rows) {
  Tally hessian("curvature", "hessian_form_fd");
  const std::size_t count = std::max<std::size_t>(1, samples / 10);
  for (int n : {2, 3, 5}) {
    std::size_t done = 0;
    while (done < count) {
      std::vector<double> kappa(n);
      for (double& k : kappa) k = uniform(rng, 0.2, 2.0);
      // Every other sample repeats an eigenvalue to exercise the limit branch.
      if (done % 2 == 1) kappa[1] = kappa[0];
      if (!gamma_k_member(kappa, 2)) continue;
      Eigen::MatrixXd eta(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) eta(i, j) = eta(j, i) = uniform(rng, -1.0, 1.0);
      Eigen::MatrixXd base = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) base(i, i) = kappa[i];

      const double form = hessian_quadratic_form(kappa, eta, CurvatureFunction::Sigma2);
      const double s = 1e-3;
      const double fd = (sigma2_matrix(base + s * eta) - 2.0 * sigma2_matrix(base) +
                         sigma2_matrix(base - s * eta)) /
                        (s * s);
      const double err = std::abs(form - fd) / std::max(1.0, std::abs(fd));
      hessian.record(1e-4 - err);
      hessian.track_max(err);
      ++done;
    }
  }
  rows.push_back(hessian.finish());
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

void geometry_umbilic(std::vector<VerifyRow>& rows) {
  Tally umbilic("geometry", "umbilic_slices");
  for (int n : {2, 3}) {
    const auto metric = exp_warp_metric(n);
    const auto chart = GridChart::uniform(n, n == 2 ? 16 : 8, 2.0 * std::numbers::pi);
    const double expected_h2 = 0.5 * n * (n - 1);
    for (double a : {0.0, 0.5, 1.0}) {
      const SurfaceGeometry geo = second_fundamental_form(GraphFunction::constant(chart, a), *metric);
      double err = 0.0;
      for (std::size_t k = 0; k < geo.size(); ++k) {
        for (int i = 0; i < n; ++i) err = std::max(err, std::abs(geo.kappa[k][i] - 1.0));
        err = std::max(err, std::abs(h_k(geo.kappa[k], 2) - expected_h2));
        err = std::max(err, std::abs(sigma_k(geo.kappa[k], 2) - std::sqrt(expected_h2)));
      }
      umbilic.record(1e-10 - err);
      umbilic.track_max(err);
    }
  }
  rows.push_back(umbilic.finish());
}

/// Smooth random height field with small slope.
GraphFunction random_surface(Rng& rng, std::shared_ptr<const GridChart> chart) {
  const int n = chart->dim();
  struct Mode {
    double amp;
    std::array<int, kMaxDim> freq;
    double phase;
  };
  std::vector<Mode> modes(4);
  for (Mode& m : modes) {
    m.amp = uniform(rng, -0.08, 0.08);
    for (int a = 0; a < n; ++a) m.freq[a] = static_cast<int>(rng() % 3);
    m.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  const double base = uniform(rng, 0.0, 1.0);
  return GraphFunction::sample(chart, [&](const SpatialVector& x) {
    double u = base;
    for (const Mode& m : modes) {
      double arg = m.phase;
      for (int a = 0; a < n; ++a) arg += m.freq[a] * x[a];
      u += m.amp * std::sin(arg);
    }
    return u;
  });
}

void geometry_identities(Rng& rng, std::size_t samples, std::vector<VerifyRow>& rows) {
  Tally identities("geometry", "pointwise_identities");
  Tally tangent("geometry", "tangent_norm_identity");
  const auto chart = GridChart::uniform(2, 32, 2.0 * std::numbers::pi);
  const std::vector<std::shared_ptr<const AmbientMetric>> metrics = {
      flat_static_metric(2), exp_warp_metric(2), make_metric({"custom", "conformal-linear", {}}, 2),
      make_metric({"custom", "lapse-wave", {}}, 2), make_metric({"custom", "shear-wave", {}}, 2)};
  const std::size_t surfaces = std::clamp<std::size_t>(samples / 1000, 1, 8);
  const std::size_t vectors = std::clamp<std::size_t>(samples / 10, 1, 2000);

  for (const auto& metric : metrics) {
    for (std::size_t s = 0; s < surfaces; ++s) {
      const GraphFunction u = random_surface(rng, chart);
      const SurfaceGeometry geo = second_fundamental_form(u, *metric);
      const GeometryDiagnostics d = diagnose(u, *metric, geo);
      const double err = std::max({d.unit_normal, d.vtilde_identity, d.inverse_identity,
                                   d.inverse_closed_form, d.trace, d.trace_squares});
      identities.record(d.past_directed && err <= 1e-10, 1e-10 - err);
      identities.track_max(err);

      for (std::size_t v = 0; v < vectors / surfaces / metrics.size() + 1; ++v) {
        const std::size_t node = rng() % chart->size();
        SpatialVector xi(2);
        xi << uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0);
        const SpatialMatrix g = geo.metric_at(node);
        xi /= std::sqrt(xi.dot(g * xi));
        try {
          tangent_norm_identity(u, *metric, geo, node, xi);
          tangent.record(true, 0.0);
        } catch (const Error&) {
          tangent.record(false, -1.0);
        }
      }
    }
  }
  rows.push_back(identities.finish());
  rows.push_back(tangent.finish());
}

void geometry_convergence(std::vector<VerifyRow>& rows) {
  const auto metric = flat_static_metric(2);
  auto residuals = [&](int points) {
    const auto chart = GridChart::uniform(2, points, 2.0 * std::numbers::pi);
    const GraphFunction u = GraphFunction::sample(
        chart, [](const SpatialVector& x) { return 0.1 * std::sin(x[0]) * std::sin(x[1]); });
    return std::pair{max_of(codazzi_residual(u, *metric)),
                     max_of(gauss_scalar_residual(u, *metric))};
  };
  const auto coarse = residuals(32);
  const auto fine = residuals(64);
  auto order_row = [](const char* item, double c, double f) {
    Tally t("geometry", item);
    const double ratio = c / f;
    t.record(std::min(ratio - 3.5, 4.5 - ratio));
    t.set_value(ratio);
    return t.finish();
  };
  rows.push_back(order_row("codazzi_order", coarse.first, fine.first));
  rows.push_back(order_row("gauss_order", coarse.second, fine.second));
}

void cutoff_checks(Rng& rng, std::size_t samples, std::vector<VerifyRow>& rows) {
  Tally branches("cutoff", "theta_branches");
  Tally continuity("cutoff", "theta_continuity");
  Tally slope("cutoff", "theta_slope_bound");
  Tally slope_fd("cutoff", "theta_slope_fd");
  Tally monotone("cutoff", "theta_monotone");
  Tally identity("cutoff", "modified_normal_identity");
  Tally scaled("cutoff", "modified_normal_scaling");
  Tally contract("cutoff", "contract_errors");

  const std::size_t per_k = std::max<std::size_t>(1, samples / 4);
  for (double k : {1.5, 2.0, 4.0, 10.0}) {
    const CutoffConfig cfg{k};
    for (std::size_t s = 0; s < per_k; ++s) {
      const double low = uniform(rng, 0.0, k);
      const double high = uniform(rng, 2.0 * k, 20.0 * k);
      const double a = cutoff_theta(low, cfg), b = cutoff_theta(high, cfg);
      branches.record(a == low && b == 2.0 * k,
                      0.0 - std::max(std::abs(a - low), std::abs(b - 2.0 * k)));

      const double t = uniform(rng, k, 2.0 * k);
      const double d = cutoff_theta_slope(t, cfg);
      slope.record(d >= 0.0 && d <= 4.0, std::min(d, 4.0 - d));
      slope.track_max(d);

      const double h = 1e-5 * k;
      if (t - h > k && t + h < 2.0 * k) {
        const double fd = (cutoff_theta(t + h, cfg) - cutoff_theta(t - h, cfg)) / (2.0 * h);
        const double err = std::abs(fd - d);
        slope_fd.record(1e-6 - err);
        slope_fd.track_max(err);
      }

      const double t2 = t + uniform(rng, 0.0, 0.1 * k);
      const double step = cutoff_theta(t2, cfg) - cutoff_theta(t, cfg);
      monotone.record(step >= 0.0, step);

      // Unit past normal in flat space with the given tilt.
      const double vtilde = uniform(rng, 1.0, 3.0 * k);
      SpacetimeVector nu(3);
      const double w = std::sqrt(vtilde * vtilde - 1.0);
      const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      nu << -vtilde, w * std::cos(angle), w * std::sin(angle);
      const SpacetimeVector out = modified_normal(nu, vtilde, cfg);
      if (vtilde <= k) {
        identity.record(out == nu, out == nu ? 0.0 : -(out - nu).cwiseAbs().maxCoeff());
      } else {
        const double err = std::abs(-out[0] - cutoff_theta(vtilde, cfg)) / vtilde;
        scaled.record(1e-12 - err);
      }
    }

    const double eps = 1e-15;
    const double jumps = std::max({std::abs(cutoff_theta(k * (1.0 + eps), cfg) - k),
                                   std::abs(cutoff_theta(2.0 * k * (1.0 - eps), cfg) - 2.0 * k),
                                   std::abs(cutoff_theta_slope(k * (1.0 + eps), cfg) - 1.0),
                                   std::abs(cutoff_theta_slope(2.0 * k * (1.0 - eps), cfg))});
    continuity.record(1e-12 - jumps);
    continuity.track_max(jumps);
  }

  auto expect_contract = [&](const std::function<void()>& call) {
    try {
      call();
      contract.record(false, -1.0);
    } catch (const ContractViolation&) {
      contract.record(true, 0.0);
    }
  };
  expect_contract([] { cutoff_theta(-1.0, CutoffConfig{4.0}); });
  expect_contract([] { cutoff_theta(1.0, CutoffConfig{1.0}); });
  expect_contract([] { cutoff_theta_slope(1.0, CutoffConfig{0.5}); });

  for (const Tally* t : {&branches, &continuity, &slope, &slope_fd, &monotone, &identity, &scaled,
                         &contract}) {
    rows.push_back(t->finish());
  }
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const VerifyRow& r) { return r.failures == 0; });
}

void VerifyReport::write_csv(std::ostream& out) const {
  out << "suite,item,samples,failures,worst_margin,value\n";
  for (const VerifyRow& r : rows) {
    out << fmt::format("{},{},{},{},{:.17g},{:.17g}\n", r.suite, r.item, r.samples, r.failures,
                       r.worst_margin, r.value);
  }
}

VerifyReport verify_curvature(std::uint64_t seed, std::size_t samples) {
  Rng rng(seed);
  VerifyReport report;
  curvature_battery(rng, samples, report.rows);
  curvature_enumeration(rng, samples, report.rows);
  curvature_hessian(rng, samples, report.rows);
  return report;
}

VerifyReport verify_geometry(std::uint64_t seed, std::size_t samples) {
  Rng rng(seed);
  VerifyReport report;
  geometry_umbilic(report.rows);
  geometry_identities(rng, samples, report.rows);
  geometry_convergence(report.rows);
  return report;
}

VerifyReport verify_cutoff(std::uint64_t seed, std::size_t samples) {
  Rng rng(seed);
  VerifyReport report;
  cutoff_checks(rng, samples, report.rows);
  return report;
}

VerifyReport verify_suite(const std::string& suite, std::uint64_t seed, std::size_t samples) {
  if (suite == "curvature") return verify_curvature(seed, samples);
  if (suite == "geometry") return verify_geometry(seed, samples);
  if (suite == "cutoff") return verify_cutoff(seed, samples);
  if (suite == "all") {
    VerifyReport all;
    for (const VerifyReport& r :
         {verify_curvature(seed, samples), verify_geometry(seed, samples), verify_cutoff(seed, samples)}) {
      all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
    }
    return all;
  }
  throw ConfigError("unknown verify suite '" + suite + "' (expected curvature, geometry, cutoff or all)");
}

}  // namespace scflow::cli

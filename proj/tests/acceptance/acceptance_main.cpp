// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any selected criterion fails.
//
//   scflow_acceptance [--criterion N] [--out-dir DIR]

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "commands.hpp"
#include "oracles.hpp"
#include "scflow/curvature.hpp"
#include "scflow/errors.hpp"
#include "scflow/flow.hpp"
#include "scflow/parallel.hpp"
#include "scflow/snapshot.hpp"
#include "scflow/prescribe.hpp"
#include "scflow/surface.hpp"
#include "verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace scflow;

// Pinned tolerances.
constexpr double kC1TrajectoryTol = 1e-6;
constexpr double kC1FinalTol = 1e-6;
constexpr double kC1OracleAgreement = 1e-10;
constexpr double kC1WallSeconds = 60.0;
constexpr double kC2ResidualTol = 1e-6;
constexpr double kC2SignTol = 1e-10;
constexpr double kC2MonotoneTol = 1e-10;
constexpr double kC2UpperBound = 2.0 + 1e-9;
constexpr double kC3Tol = 1e-10;
constexpr double kC4RatioLo = 3.5;
constexpr double kC4RatioHi = 4.5;
constexpr std::size_t kC5Samples = 10000;
constexpr double kC5GradientRelTol = 1e-6;
constexpr double kC6ContinuityTol = 1e-12;
constexpr double kC6SlopeLo = 0.0;
constexpr double kC6SlopeHi = 4.0;
constexpr double kC6CutoffK = 4.0;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "!") + what);
  }
};

fs::path g_out_dir = "acceptance_out";

fs::path config_path(const std::string& name) { return fs::path(SCFLOW_CONFIG_DIR) / name; }

std::map<std::string, std::string> read_report(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

double report_number(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  return it == kv.end() ? std::nan("") : std::strtod(it->second.c_str(), nullptr);
}

/// Columns of trace.csv, keyed by header name.
std::map<std::string, std::vector<double>> read_trace(const fs::path& path) {
  std::map<std::string, std::vector<double>> cols;
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> names;
  if (std::getline(in, line)) {
    std::stringstream header(line);
    std::string name;
    while (std::getline(header, name, ',')) names.push_back(name);
  }
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string cell;
    for (const std::string& name : names) {
      if (!std::getline(row, cell, ',')) break;
      cols[name].push_back(std::strtod(cell.c_str(), nullptr));
    }
  }
  return cols;
}

struct CliRun {
  int exit_code = -1;
  std::string out, err;
  double wall = 0.0;
  fs::path dir;
};

CliRun run_config(const std::string& config, const std::string& tag) {
  CliRun r;
  r.dir = g_out_dir / tag;
  fs::remove_all(r.dir);
  std::ostringstream out, err;
  const auto start = std::chrono::steady_clock::now();
  r.exit_code = cli::cmd_run(config_path(config), r.dir, out, err);
  r.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.out = out.str();
  r.err = err.str();
  while (!r.err.empty() && r.err.back() == '\n') r.err.pop_back();
  return r;
}

Outcome criterion1() {
  Outcome o;
  set_thread_limit(1);
  const CliRun r = run_config("exp_warp_convergence.json", "c1");
  set_thread_limit(0);
  o.check(r.exit_code == 0, fmt::format("exit={}", r.exit_code));
  const auto report = read_report(r.dir / "report.txt");
  o.check(report.count("verdict") && report.at("verdict") == "converged",
          "verdict=" + (report.count("verdict") ? report.at("verdict") : std::string("missing")));

  const auto trace = read_trace(r.dir / "trace.csv");
  const auto& t = trace.count("t") ? trace.at("t") : std::vector<double>{};
  double worst = 0.0, oracle_gap = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double closed = oracle::height_closed_form(2.0, t[i]);
    const double rk4 = oracle::height_rk4(2.0, t[i], std::max(1, static_cast<int>(t[i] * 400)));
    oracle_gap = std::max(oracle_gap, std::abs(closed - rk4));
    worst = std::max({worst, std::abs(trace.at("u_min")[i] - closed), std::abs(trace.at("u_max")[i] - closed)});
  }
  o.check(t.size() > 1, fmt::format("trace_rows={}", t.size()));
  o.check(oracle_gap < kC1OracleAgreement, fmt::format("oracle_closed_vs_rk4={:.2e}<{:.0e}", oracle_gap, kC1OracleAgreement));
  o.check(worst < kC1TrajectoryTol, fmt::format("trajectory_err={:.2e}<{:.0e}", worst, kC1TrajectoryTol));

  double final_err = std::nan("");
  try {
    const GraphFunction u = read_snapshot_binary(r.dir / "final.snap");
    final_err = 0.0;
    for (double v : u.values) final_err = std::max(final_err, std::abs(v - 1.0));
  } catch (const std::exception&) {
  }
  o.check(final_err < kC1FinalTol, fmt::format("|u-1|_inf={:.2e}<{:.0e}", final_err, kC1FinalTol));
  o.check(r.wall < kC1WallSeconds, fmt::format("wall={:.1f}s<{:.0f}s(1 thread)", r.wall, kC1WallSeconds));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const CliRun r = run_config("exp_warp_perturbed.json", "c2");
  o.check(r.exit_code == 0, fmt::format("exit={}{}", r.exit_code, r.err.empty() ? "" : " (" + r.err + ")"));
  if (r.exit_code != 0 && !fs::exists(r.dir / "report.txt")) return o;

  const auto report = read_report(r.dir / "report.txt");
  o.check(report.count("verdict") && report.at("verdict") == "converged", "verdict converged");
  const double sup_res = report_number(report, "final_sup_res");
  o.check(sup_res < kC2ResidualTol, fmt::format("sup|s2-f|={:.2e}<{:.0e}", sup_res, kC2ResidualTol));
  const double min_res = report_number(report, "min_res");
  o.check(min_res >= -kC2SignTol, fmt::format("min(F-f)={:.2e}>=-{:.0e}", min_res, kC2SignTol));
  const double increase = report_number(report, "max_increase");
  o.check(increase <= kC2MonotoneTol, fmt::format("max_increase={:.2e}<={:.0e}", increase, kC2MonotoneTol));

  const auto trace = read_trace(r.dir / "trace.csv");
  double lo = INFINITY, hi = -INFINITY;
  for (double v : trace.at("u_min")) lo = std::min(lo, v);
  for (double v : trace.at("u_max")) hi = std::max(hi, v);
  o.check(lo >= 0.0 && hi <= kC2UpperBound, fmt::format("u in [{:.6g},{:.10g}] within [0,2+1e-9]", lo, hi));
  o.check(report_number(report, "max_vtilde") <= report_number(report, "vtilde_ceiling"), "vtilde ceiling");
  o.check(report_number(report, "max_kappa") <= report_number(report, "kappa_ceiling"), "kappa ceiling");
  return o;
}

Outcome criterion3() {
  Outcome o;
  for (int n : {2, 3}) {
    const auto metric = exp_warp_metric(n);
    const auto chart = GridChart::uniform(n, n == 2 ? 16 : 8, 2.0 * std::numbers::pi);
    const double h2_expected = n * (n - 1) / 2.0;
    for (double a : {0.0, 0.5, 1.0}) {
      const SurfaceGeometry geo = second_fundamental_form(GraphFunction::constant(chart, a), *metric);
      double kappa_err = 0.0, h2_err = 0.0, s2_err = 0.0;
      for (std::size_t k = 0; k < geo.size(); ++k) {
        const auto kappa = geo.kappa[k];
        for (double x : kappa) kappa_err = std::max(kappa_err, std::abs(x - 1.0));
        h2_err = std::max(h2_err, std::abs(h_k(kappa, 2) - h2_expected));
        s2_err = std::max(s2_err, std::abs(sigma_k(kappa, 2) - std::sqrt(h2_expected)));
      }
      o.check(kappa_err < kC3Tol && h2_err < kC3Tol && s2_err < kC3Tol,
              fmt::format("n={} a={} dk={:.1e} dH2={:.1e} ds2={:.1e}", n, a, kappa_err, h2_err, s2_err));
    }
  }
  return o;
}

double max_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, x);
  return m;
}

Outcome criterion4() {
  Outcome o;
  const auto metric = flat_static_metric(2);
  auto surface = [](int points) {
    return GraphFunction::sample(GridChart::uniform(2, points, 2.0 * std::numbers::pi),
                                 [](const SpatialVector& x) { return 0.1 * std::sin(x[0]) * std::sin(x[1]); });
  };
  const GraphFunction coarse = surface(32), fine = surface(64);
  const double codazzi = max_of(codazzi_residual(coarse, *metric)) / max_of(codazzi_residual(fine, *metric));
  const double gauss = max_of(gauss_scalar_residual(coarse, *metric)) / max_of(gauss_scalar_residual(fine, *metric));
  o.check(codazzi >= kC4RatioLo && codazzi <= kC4RatioHi, fmt::format("codazzi_ratio={:.3f}", codazzi));
  o.check(gauss >= kC4RatioLo && gauss <= kC4RatioHi, fmt::format("gauss_ratio={:.3f}", gauss));
  return o;
}

Outcome criterion5() {
  Outcome o;
  std::mt19937_64 rng(20240601);
  std::size_t battery_fail = 0, concave_fail = 0, grad_fail = 0, sum_fail = 0;
  double worst_grad = 0.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < kC5Samples; ++i) {
    const int n = std::array{2, 3, 5}[i % 3];
    const std::vector<double> kappa = oracle::random_gamma2(rng, n, 3.0);
    const std::vector<double> other = oracle::random_gamma2(rng, n, 3.0);
    if (!inequality_battery(kappa).all_passed()) ++battery_fail;
    if (!concavity_probe(kappa, other, unit(rng))) ++concave_fail;

    const std::vector<double> g = grad_sigma2(kappa);
    double sum = 0.0, scale = 0.0;
    for (double x : g) {
      sum += x;
      scale = std::max(scale, std::abs(x));
    }
    if (sum < std::sqrt(n * (n - 1) / 2.0) * (1.0 - 1e-12)) ++sum_fail;

    // Fourth-order differences with a step scaled to the distance from the cone boundary.
    const double h2 = oracle::pairwise_h2(kappa);
    double gh = 0.0;
    for (double k : kappa) gh = std::max(gh, std::abs(k));
    const double step = std::min(1e-3, 1e-3 * h2 / (n * gh + 1e-300));
    auto sigma = [](const std::vector<double>& x) { return std::sqrt(oracle::pairwise_h2(x)); };
    for (int c = 0; c < n; ++c) {
      auto shifted = [&](double d) {
        std::vector<double> x = kappa;
        x[c] += d;
        return sigma(x);
      };
      const double fd = (-shifted(2 * step) + 8 * shifted(step) - 8 * shifted(-step) + shifted(-2 * step)) / (12 * step);
      const double rel = std::abs(fd - g[c]) / scale;
      worst_grad = std::max(worst_grad, rel);
      if (rel > kC5GradientRelTol) ++grad_fail;
    }
  }
  o.check(battery_fail == 0, fmt::format("battery_violations={}/{}", battery_fail, kC5Samples));
  o.check(concave_fail == 0, fmt::format("concavity_violations={}", concave_fail));
  o.check(sum_fail == 0, fmt::format("sum_dsigma2_violations={}", sum_fail));
  o.check(grad_fail == 0, fmt::format("grad_rel_err={:.1e}<{:.0e}", worst_grad, kC5GradientRelTol));

  // Dyadic entries keep every subset product and partial sum exact.
  std::uniform_int_distribution<int> quarter(-16, 16);
  std::size_t hk_mismatch = 0, hk_checks = 0;
  for (std::size_t i = 0; i < kC5Samples; ++i) {
    const int n = 2 + static_cast<int>(i % 7);
    std::vector<double> kappa(n);
    for (double& x : kappa) x = quarter(rng) / 4.0;
    for (int k = 1; k <= n; ++k, ++hk_checks) {
      if (h_k(kappa, k) != oracle::subset_sum(kappa, k)) ++hk_mismatch;
    }
  }
  o.check(hk_mismatch == 0, fmt::format("h_k_bruteforce_mismatch={}/{}", hk_mismatch, hk_checks));

  const cli::VerifyReport suite = cli::verify_curvature(1, kC5Samples);
  std::size_t suite_failures = 0;
  for (const auto& row : suite.rows) suite_failures += row.failures;
  o.check(suite.passed(), fmt::format("verify_curvature_failures={}", suite_failures));
  return o;
}

Outcome criterion6() {
  Outcome o;
  for (double k : {2.0, kC6CutoffK}) {
    const CutoffConfig cfg{k};
    bool branches = true;
    double jump = 0.0, slope_lo = INFINITY, slope_hi = -INFINITY;
    const int samples = 100000;
    for (int i = 0; i <= samples; ++i) {
      const double t = 3.0 * k * i / samples;
      const double theta = cutoff_theta(t, cfg);
      if (t <= k && theta != t) branches = false;
      if (t >= 2 * k && theta != 2 * k) branches = false;
      const double slope = cutoff_theta_slope(t, cfg);
      slope_lo = std::min(slope_lo, slope);
      slope_hi = std::max(slope_hi, slope);
    }
    for (double j : {k, 2 * k}) {
      jump = std::max(jump, std::abs(cutoff_theta(std::nextafter(j, 1e300), cfg) - cutoff_theta(std::nextafter(j, 0.0), cfg)));
    }
    bool identity = true;
    for (int i = 0; i <= 1000; ++i) {
      const double vt = 1.0 + (k - 1.0) * i / 1000.0;
      SpacetimeVector nu(3);
      nu << -vt, std::sqrt(vt * vt - 1.0), 0.0;
      if (modified_normal(nu, vt, cfg) != nu) identity = false;
    }
    o.check(branches, fmt::format("k={} branches exact", k));
    o.check(jump < kC6ContinuityTol, fmt::format("k={} junction_jump={:.1e}<{:.0e}", k, jump, kC6ContinuityTol));
    o.check(slope_lo >= kC6SlopeLo && slope_hi <= kC6SlopeHi,
            fmt::format("k={} slope in [{:.3f},{:.3f}]", k, slope_lo, slope_hi));
    o.check(identity, fmt::format("k={} nu_tilde=nu for vtilde<=k", k));
  }

  const CliRun r = run_config("exp_warp_convergence.json", "c6");
  const auto report = read_report(r.dir / "report.txt");
  const bool certificate = report.count("cutoff_inactive") && report.at("cutoff_inactive") == "true";
  o.check(r.exit_code == 0 && certificate && report_number(report, "cutoff_k") == kC6CutoffK,
          fmt::format("c1 run cutoff_inactive={} (k={}, max_vtilde={})",
                      report.count("cutoff_inactive") ? report.at("cutoff_inactive") : "missing",
                      report_number(report, "cutoff_k"), report_number(report, "max_vtilde")));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const CliRun r = run_config("flat_static_constant.json", "c7");
  o.check(r.exit_code == 1, fmt::format("exit={}", r.exit_code));
  o.check(r.err.find("invalid barrier") != std::string::npos && r.err.find("H_2") != std::string::npos,
          "message: " + r.err);
  o.check(!fs::exists(r.dir / "trace.csv"), "no flow attempted");
  return o;
}

const std::map<int, std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::map<int, std::pair<std::string, std::function<Outcome()>>> table = {
      {1, {"ODE-oracle convergence", criterion1}},
      {2, {"perturbed convergence and invariants", criterion2}},
      {3, {"umbilic-slice geometry", criterion3}},
      {4, {"grid convergence order", criterion4}},
      {5, {"curvature battery", criterion5}},
      {6, {"cutoff contract", criterion6}},
      {7, {"failure honesty", criterion7}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else if (arg == "--out-dir" && i + 1 < argc) {
      g_out_dir = argv[++i];
    } else {
      std::cerr << "usage: scflow_acceptance [--criterion N]... [--out-dir DIR]\n";
      return 2;
    }
  }
  if (selected.empty()) {
    for (const auto& [id, entry] : criteria()) selected.push_back(id);
  }

  bool all = true;
  for (int id : selected) {
    const auto it = criteria().find(id);
    if (it == criteria().end()) {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
    Outcome outcome;
    try {
      outcome = it->second.second();
    } catch (const std::exception& e) {
      outcome.check(false, std::string("exception: ") + e.what());
    }
    std::string details;
    for (const std::string& note : outcome.notes) details += (details.empty() ? "" : "; ") + note;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " C" << id << " " << it->second.first << ": " << details
              << std::endl;
    all = all && outcome.pass;
  }
  return all ? 0 : 1;
}

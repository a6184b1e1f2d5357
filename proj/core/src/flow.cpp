#include "scflow/flow.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "scflow/curvature.hpp"
#include "scflow/errors.hpp"

namespace scflow {

std::string to_string(TimeScheme scheme) {
  switch (scheme) {
    case TimeScheme::SSPRK3: return "ssprk3";
    case TimeScheme::SSPRK2: return "ssprk2";
    case TimeScheme::Euler: return "euler";
  }
  return "unknown";
}

TimeScheme parse_time_scheme(const std::string& name) {
  if (name == "ssprk3") return TimeScheme::SSPRK3;
  if (name == "ssprk2") return TimeScheme::SSPRK2;
  if (name == "euler") return TimeScheme::Euler;
  throw ConfigError("unknown time scheme '" + name + "' (expected ssprk3, ssprk2 or euler)");
}

double ssp_coefficient(const FlowConfig& config) {
  return config.scheme == TimeScheme::SSPRK2 ? config.stages - 1.0 : 1.0;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Converged: return "converged";
    case Verdict::Timeout: return "timeout";
    case Verdict::Breakdown: return "breakdown";
    case Verdict::InvariantViolation: return "invariant-violation";
  }
  return "unknown";
}

void FlowTrace::append(const TraceRow& row) {
  if (!rows_.empty() && row.t < rows_.back().t) {
    throw ContractViolation("trace rows must have nondecreasing t");
  }
  rows_.push_back(row);
}

void FlowTrace::write_csv(std::ostream& out) const {
  out << "t,sup_res,min_res,max_vtilde,max_kappa,min_H2,u_min,u_max,dt\n";
  for (const TraceRow& r : rows_) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                       r.t, r.sup_res, r.min_res, r.max_vtilde, r.max_kappa, r.min_h2, r.u_min,
                       r.u_max, r.dt);
  }
}

namespace {

double smallest_eigenvalue(std::span<const double> g, int n) {
  if (n == 2) {
    const double mean = 0.5 * (g[0] + g[3]);
    const double det = g[0] * g[3] - g[1] * g[2];
    return mean - std::sqrt(std::max(mean * mean - det, 0.0));
  }
  SpatialMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g[i * n + j];
  Eigen::SelfAdjointEigenSolver<SpatialMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

void resize_evaluation(NodeEvaluation& e, std::size_t size) {
  e.h2.resize(size);
  e.sigma2.resize(size);
  e.target.resize(size);
  e.velocity.resize(size);
  e.diffusion.resize(size);
}

TraceRow summarize(const FlowState& s) {
  TraceRow row;
  row.t = s.t;
  row.dt = s.dt_current;
  row.sup_res = 0.0;
  row.min_res = std::numeric_limits<double>::infinity();
  row.max_vtilde = 0.0;
  row.max_kappa = -std::numeric_limits<double>::infinity();
  const int n = s.geometry.dim;
  for (std::size_t k = 0; k < s.u.size(); ++k) {
    const double res = s.eval.sigma2[k] - s.eval.target[k];
    row.sup_res = std::max(row.sup_res, std::abs(res));
    row.min_res = std::min(row.min_res, res);
    row.max_vtilde = std::max(row.max_vtilde, s.geometry.vtilde[k][0]);
    row.max_kappa = std::max(row.max_kappa, s.geometry.kappa[k][n - 1]);
  }
  row.min_h2 = s.eval.min_h2;
  row.u_min = s.u.min();
  row.u_max = s.u.max();
  return row;
}

double sup_abs(const std::vector<double>& values) {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return m;
}

/// Geometry plus evaluation; false when the state is not spacelike or admissible.
bool try_evaluate(const GraphFunction& u, const AmbientMetric& metric, const EffectiveRhs& f,
                  const FlowConfig& config, SurfaceGeometry& geo, NodeEvaluation& eval,
                  std::string* why) {
  GeometryOptions options = config.geometry;
  options.audit_inverse = false;
  try {
    compute_geometry(u, metric, options, geo);
  } catch (const SpacelikeViolation& e) {
    if (why) *why = e.what();
    return false;
  } catch (const DegenerateGeometryError& e) {
    if (why) *why = e.what();
    return false;
  } catch (const ContractViolation& e) {
    // Non-finite heights after an unstable stage.
    if (why) *why = e.what();
    return false;
  }
  evaluate_nodes(u, geo, f, config, eval);
  if (eval.inadmissible) {
    if (why) {
      *why = fmt::format("node {} left Gamma_2 (min H_2 = {:.3g})", *eval.inadmissible,
                         eval.min_h2);
    }
    return false;
  }
  return true;
}

}  // namespace

void evaluate_nodes(const GraphFunction& u, const SurfaceGeometry& geo, const EffectiveRhs& f,
                    const FlowConfig& config, NodeEvaluation& out) {
  if (!geo.has_second_order) throw ContractViolation("evaluate_nodes needs second-order geometry");
  const std::size_t size = u.size();
  const int n = geo.dim;
  resize_evaluation(out, size);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto count = static_cast<std::ptrdiff_t>(size);

#pragma omp parallel
  {
    SpacetimeVector point(n + 1), normal(n + 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < count; ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      std::array<double, 2> h{};
      h_sequence(geo.kappa[k], h);
      const double h1 = h[0], h2 = h[1];
      out.h2[k] = h2;
      // Gamma_2 membership (H_1 > 0, H_2 > 0) plus the admissibility margin.
      if (!(h1 > 0.0) || !(h2 >= config.admissibility_margin) || !(h2 > 0.0)) {
        out.sigma2[k] = out.target[k] = out.velocity[k] = out.diffusion[k] = nan;
        continue;
      }
      const double sigma2 = std::sqrt(h2);
      point[0] = u.values[k];
      for (int a = 0; a < n; ++a) point[a + 1] = u.chart->coordinate(k, a);
      for (int a = 0; a <= n; ++a) normal[a] = geo.normal[k][a];
      const double v = geo.v[k][0];
      const double target = f.value(point, normal, geo.vtilde[k][0]);

      out.sigma2[k] = sigma2;
      out.target[k] = target;
      // e^{-psi} v = -nu^0 v^2
      out.velocity[k] = normal[0] * v * v * (sigma2 - target);
      const double trace_gradient = (n - 1) * h1 / (2.0 * sigma2);
      out.diffusion[k] = v * v * trace_gradient / smallest_eigenvalue(geo.metric[k], n);
    }
  }

  out.inadmissible.reset();
  out.min_h2 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < size; ++k) {
    out.min_h2 = std::min(out.min_h2, out.h2[k]);
    if (!out.inadmissible && !std::isfinite(out.velocity[k])) out.inadmissible = k;
  }
}

FlowState initialize(const FlowConfig& config, const AmbientMetric& metric, const EffectiveRhs& f) {
  const GraphFunction& lower = config.lower;
  const GraphFunction& upper = config.upper;
  if (!lower.chart || !upper.chart) throw ConfigError("both barriers are required");
  if (!(*lower.chart == *upper.chart)) throw ConfigError("barriers live on different grids");
  if (lower.size() != upper.size()) throw ConfigError("barrier sizes differ");
  if (upper.chart->dim() != metric.dim()) {
    throw ConfigError("grid dimension does not match metric dimension");
  }
  if (!(config.dt_safety > 0.0 && config.dt_safety <= 1.0)) {
    throw ConfigError("dt_safety must lie in (0, 1]");
  }
  if (!(config.t_max >= 0.0)) throw ConfigError("t_max must be nonnegative");
  if (!(config.tol_converge > 0.0) || !(config.tol_sign >= 0.0)) {
    throw ConfigError("tolerances must be positive");
  }
  if (config.monitor_every < 1) throw ConfigError("monitor_every must be >= 1");
  if (config.scheme == TimeScheme::SSPRK2 && config.stages < 2) {
    throw ConfigError("ssprk2 needs at least 2 stages");
  }
  if (config.max_halvings < 0) throw ConfigError("max_halvings must be >= 0");
  if (!(config.ceiling_factor >= 1.0)) throw ConfigError("ceiling_factor must be >= 1");
  for (std::size_t k = 0; k < upper.size(); ++k) {
    if (lower.values[k] > upper.values[k]) {
      throw ConfigError(fmt::format("lower barrier exceeds upper barrier at node {} ({:.6g} > {:.6g})",
                                    k, lower.values[k], upper.values[k]));
    }
  }

  FlowState state;
  state.u = upper;
  try {
    compute_geometry(upper, metric, config.geometry, state.geometry);
  } catch (const SpacelikeViolation& e) {
    throw InvalidBarrierError(std::string("upper barrier is not spacelike: ") + e.what(), e.node(),
                              e.gradient_sq());
  }
  evaluate_nodes(upper, state.geometry, f, config, state.eval);
  if (state.eval.inadmissible) {
    const std::size_t node = *state.eval.inadmissible;
    throw InvalidBarrierError(
        fmt::format("upper barrier is not admissible: H_2 = {:.6g} at node {} (kappa outside Gamma_2 "
                    "or below margin {:.1e})",
                    state.eval.h2[node], node, config.admissibility_margin),
        node, state.eval.h2[node]);
  }
  {
    std::size_t worst = 0;
    double worst_res = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < upper.size(); ++k) {
      if (!(state.eval.target[k] > 0.0)) {
        throw PositivityViolation(fmt::format("target f = {:.6g} is not positive at node {} of the "
                                              "upper barrier",
                                              state.eval.target[k], k));
      }
      const double res = state.eval.sigma2[k] - state.eval.target[k];
      if (res < worst_res) {
        worst_res = res;
        worst = k;
      }
    }
    if (worst_res < -config.tol_sign) {
      throw InvalidBarrierError(
          fmt::format("upper barrier violates F >= f: F - f = {:.6g} at node {}", worst_res, worst),
          worst, worst_res);
    }
  }

  double max_vtilde = 0.0;
  for (std::size_t k = 0; k < upper.size(); ++k) {
    max_vtilde = std::max(max_vtilde, state.geometry.vtilde[k][0]);
  }

  {
    SurfaceGeometry geo;
    NodeEvaluation eval;
    try {
      compute_geometry(lower, metric, config.geometry, geo);
    } catch (const SpacelikeViolation& e) {
      throw InvalidBarrierError(std::string("lower barrier is not spacelike: ") + e.what(), e.node(),
                                e.gradient_sq());
    }
    evaluate_nodes(lower, geo, f, config, eval);
    for (std::size_t k = 0; k < lower.size(); ++k) {
      max_vtilde = std::max(max_vtilde, geo.vtilde[k][0]);
      if (!std::isfinite(eval.velocity[k])) continue;  // not admissible here
      const double res = eval.sigma2[k] - eval.target[k];
      if (res > config.tol_sign) {
        throw InvalidBarrierError(
            fmt::format("lower barrier violates F <= f: F - f = {:.6g} at node {}", res, k), k, res);
      }
    }
  }

  if (max_vtilde > f.cutoff().k) {
    throw ConfigError(fmt::format("cutoff k = {:.6g} is below the barrier tilt max vtilde = {:.6g}",
                                  f.cutoff().k, max_vtilde));
  }

  state.t = 0.0;
  state.dt_current = stable_dt(state, config);
  return state;
}

double stable_dt(const FlowState& state, const FlowConfig& config) {
  double scale = 0.0;
  for (double d : state.eval.diffusion) {
    if (!std::isfinite(d)) throw ContractViolation("stable_dt needs an admissible state");
    scale = std::max(scale, d);
  }
  const double h = state.u.chart->min_spacing();
  if (!(scale > 0.0)) throw ContractViolation("degenerate diffusion scale");
  return config.dt_safety * ssp_coefficient(config) * h * h / scale;
}

namespace {

/// Scratch storage reused across steps.
struct Workspace {
  GraphFunction stage_u, next_u;
  SurfaceGeometry stage_geo, next_geo;
  NodeEvaluation stage_eval, next_eval;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

void euler_update(const std::vector<double>& from, const std::vector<double>& velocity, double dt,
                  std::vector<double>& to) {
  to.resize(from.size());
  for (std::size_t k = 0; k < from.size(); ++k) to[k] = from[k] + dt * velocity[k];
}

/// Runs one attempt at step size dt; leaves the result in ws.next_*.
bool attempt(const FlowState& state, double dt, const FlowConfig& config,
             const AmbientMetric& metric, const EffectiveRhs& f, Workspace& ws, std::string& why) {
  const std::vector<double>& u0 = state.u.values;
  ws.stage_u.chart = ws.next_u.chart = state.u.chart;

  if (config.scheme == TimeScheme::Euler) {
    euler_update(u0, state.eval.velocity, dt, ws.next_u.values);
    return try_evaluate(ws.next_u, metric, f, config, ws.next_geo, ws.next_eval, &why);
  }

  if (config.scheme == TimeScheme::SSPRK2) {
    // u_i = u_{i-1} + dt/(s-1) L(u_{i-1}) for i < s;
    // u_new = u0/s + (s-1)/s (u_{s-1} + dt/(s-1) L(u_{s-1})).
    const int s = config.stages;
    const double h = dt / (s - 1);
    euler_update(u0, state.eval.velocity, h, ws.stage_u.values);
    for (int i = 2; i < s; ++i) {
      if (!try_evaluate(ws.stage_u, metric, f, config, ws.stage_geo, ws.stage_eval, &why)) {
        return false;
      }
      std::vector<double>& stage = ws.stage_u.values;
      for (std::size_t k = 0; k < stage.size(); ++k) stage[k] += h * ws.stage_eval.velocity[k];
    }
    if (!try_evaluate(ws.stage_u, metric, f, config, ws.stage_geo, ws.stage_eval, &why)) {
      return false;
    }
    std::vector<double>& next = ws.next_u.values;
    next.resize(u0.size());
    const double keep = 1.0 / s, advance = (s - 1.0) / s;
    for (std::size_t k = 0; k < u0.size(); ++k) {
      next[k] = keep * u0[k] +
                advance * (ws.stage_u.values[k] + h * ws.stage_eval.velocity[k]);
    }
    return try_evaluate(ws.next_u, metric, f, config, ws.next_geo, ws.next_eval, &why);
  }

  // u1 = u0 + dt L(u0)
  euler_update(u0, state.eval.velocity, dt, ws.stage_u.values);
  if (!try_evaluate(ws.stage_u, metric, f, config, ws.stage_geo, ws.stage_eval, &why)) return false;
  // u2 = 3/4 u0 + 1/4 (u1 + dt L(u1))
  std::vector<double>& u2 = ws.next_u.values;
  u2.resize(u0.size());
  for (std::size_t k = 0; k < u0.size(); ++k) {
    u2[k] = 0.75 * u0[k] + 0.25 * (ws.stage_u.values[k] + dt * ws.stage_eval.velocity[k]);
  }
  if (!try_evaluate(ws.next_u, metric, f, config, ws.next_geo, ws.next_eval, &why)) return false;
  // u3 = 1/3 u0 + 2/3 (u2 + dt L(u2))
  for (std::size_t k = 0; k < u0.size(); ++k) {
    ws.stage_u.values[k] = u0[k] / 3.0 + 2.0 / 3.0 * (u2[k] + dt * ws.next_eval.velocity[k]);
  }
  std::swap(ws.stage_u, ws.next_u);
  return try_evaluate(ws.next_u, metric, f, config, ws.next_geo, ws.next_eval, &why);
}

}  // namespace

void step(FlowState& state, const FlowConfig& config, const AmbientMetric& metric,
          const EffectiveRhs& f) {
  Workspace& ws = workspace();
  double dt = stable_dt(state, config);
  std::string why;
  for (int halvings = 0;; ++halvings) {
    if (attempt(state, dt, config, metric, f, ws, why)) break;
    ++state.rejected_steps;
    if (halvings == config.max_halvings) {
      throw FlowBreakdown(fmt::format("step rejected after {} halvings at t = {:.9g} (dt = {:.3g}): {}",
                                      config.max_halvings, state.t, dt, why));
    }
    dt *= 0.5;
  }
  std::swap(state.u.values, ws.next_u.values);
  std::swap(state.geometry, ws.next_geo);
  std::swap(state.eval, ws.next_eval);
  state.t += dt;
  state.dt_current = dt;
  ++state.steps;
}

FlowResult run(const FlowConfig& config, const AmbientMetric& metric, const EffectiveRhs& f) {
  const auto start = std::chrono::steady_clock::now();
  FlowResult result;
  result.cutoff_k = f.cutoff().k;
  FlowState& state = result.state;
  state = initialize(config, metric, f);

  const TraceRow first = summarize(state);
  result.trace.append(first);
  MonitorSummary& mon = result.monitors;
  mon.min_res = first.min_res;
  mon.max_vtilde = first.max_vtilde;
  mon.max_kappa = first.max_kappa;
  mon.vtilde_ceiling = config.ceiling_factor * first.max_vtilde;
  mon.kappa_ceiling = config.ceiling_factor * first.max_kappa;
  mon.barrier_excess = -std::numeric_limits<double>::infinity();

  const double barrier_tol = 10.0 * config.tol_sign;
  std::vector<double> previous;
  bool row_pending = false;

  while (true) {
    const double sup_res = summarize(state).sup_res;
    if (sup_res < config.tol_converge && sup_abs(state.eval.velocity) < config.tol_converge) {
      result.verdict = Verdict::Converged;
      result.message = fmt::format("sup|F - f| = {:.3g} after {} steps", sup_res, state.steps);
      break;
    }
    if (state.t >= config.t_max) {
      result.verdict = Verdict::Timeout;
      result.message = fmt::format("t = {:.6g} reached t_max with sup|F - f| = {:.3g}", state.t,
                                   sup_res);
      break;
    }

    previous = state.u.values;
    try {
      step(state, config, metric, f);
    } catch (const FlowBreakdown& e) {
      result.verdict = Verdict::Breakdown;
      result.message = e.what();
      break;
    }

    const TraceRow row = summarize(state);
    mon.min_res = std::min(mon.min_res, row.min_res);
    mon.max_vtilde = std::max(mon.max_vtilde, row.max_vtilde);
    mon.max_kappa = std::max(mon.max_kappa, row.max_kappa);

    std::string violation;
    for (std::size_t k = 0; k < state.u.size(); ++k) {
      const double u = state.u.values[k];
      const double excess = std::max(u - config.upper.values[k], config.lower.values[k] - u);
      mon.barrier_excess = std::max(mon.barrier_excess, excess);
      mon.max_increase = std::max(mon.max_increase, u - previous[k]);
      if (violation.empty() && excess > barrier_tol) {
        violation = fmt::format("barrier confinement broken at node {} by {:.3g}", k, excess);
      }
      if (violation.empty() && u - previous[k] > config.tol_sign) {
        violation = fmt::format("u increased at node {} by {:.3g}", k, u - previous[k]);
      }
    }
    if (violation.empty() && row.min_res < -config.tol_sign) {
      violation = fmt::format("F - f changed sign: min = {:.3g}", row.min_res);
    }
    if (violation.empty() && row.max_vtilde > mon.vtilde_ceiling) {
      violation = fmt::format("max vtilde {:.6g} exceeded ceiling {:.6g}", row.max_vtilde,
                              mon.vtilde_ceiling);
    }
    if (violation.empty() && row.max_kappa > mon.kappa_ceiling) {
      violation = fmt::format("max kappa_n {:.6g} exceeded ceiling {:.6g}", row.max_kappa,
                              mon.kappa_ceiling);
    }

    row_pending = true;
    if (state.steps % static_cast<std::size_t>(config.monitor_every) == 0 || !violation.empty()) {
      result.trace.append(row);
      row_pending = false;
    }
    if (!violation.empty()) {
      result.verdict = Verdict::InvariantViolation;
      result.message = fmt::format("t = {:.9g}: {}", state.t, violation);
      break;
    }
  }
  if (row_pending) result.trace.append(summarize(state));
  if (mon.barrier_excess == -std::numeric_limits<double>::infinity()) mon.barrier_excess = 0.0;

  result.cutoff_inactive = mon.max_vtilde <= result.cutoff_k;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_run_report(std::ostream& out, const FlowResult& result, const GrowthAudit* audit) {
  const FlowState& s = result.state;
  const TraceRow last = result.trace.empty() ? TraceRow{} : result.trace.rows().back();
  out << "verdict=" << to_string(result.verdict) << '\n';
  out << "message=" << result.message << '\n';
  out << "steps=" << s.steps << '\n';
  out << "rejected_steps=" << s.rejected_steps << '\n';
  out << fmt::format("t_final={:.17g}\n", s.t);
  out << fmt::format("wall_seconds={:.3f}\n", result.wall_seconds);
  out << fmt::format("final_sup_res={:.17g}\n", last.sup_res);
  out << fmt::format("final_u_min={:.17g}\nfinal_u_max={:.17g}\n", last.u_min, last.u_max);
  out << fmt::format("cutoff_k={:.17g}\n", result.cutoff_k);
  out << "cutoff_inactive=" << (result.cutoff_inactive ? "true" : "false") << '\n';
  out << fmt::format("max_vtilde={:.17g}\nvtilde_ceiling={:.17g}\n", result.monitors.max_vtilde,
                     result.monitors.vtilde_ceiling);
  out << fmt::format("max_kappa={:.17g}\nkappa_ceiling={:.17g}\n", result.monitors.max_kappa,
                     result.monitors.kappa_ceiling);
  out << fmt::format("min_res={:.17g}\n", result.monitors.min_res);
  out << fmt::format("max_increase={:.17g}\n", result.monitors.max_increase);
  out << fmt::format("barrier_excess={:.17g}\n", result.monitors.barrier_excess);
  if (audit) {
    for (const AuditConstant* c : audit->constants()) {
      out << fmt::format("audit_{}={:.17g}\n", c->name, c->estimate);
    }
    out << "audit_strong_bounds_raw=" << (audit->strong_bounds_raw ? "true" : "false") << '\n';
    out << "audit_strong_bounds_cutoff=" << (audit->strong_bounds_cutoff ? "true" : "false") << '\n';
  }
}

}  // namespace scflow

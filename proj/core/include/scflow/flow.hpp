#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scflow/ambient.hpp"
#include "scflow/grid.hpp"
#include "scflow/prescribe.hpp"
#include "scflow/surface.hpp"

namespace scflow {

/// Strong-stability-preserving Runge-Kutta schemes in Shu-Osher form; every
/// stage is a forward-Euler step, so the per-stage admissibility checks are
/// the same as for Euler.
///
///   SSPRK3  three stages, third order, SSP coefficient 1
///   SSPRK2  `stages` stages, second order, SSP coefficient stages - 1
enum class TimeScheme { SSPRK3, SSPRK2, Euler };

std::string to_string(TimeScheme scheme);
TimeScheme parse_time_scheme(const std::string& name);

struct FlowConfig {
  TimeScheme scheme = TimeScheme::SSPRK3;
  /// Stage count of SSPRK2, at least 2.
  int stages = 10;
  /// dt = dt_safety * c * h_min^2 / max_nodes(v^2 sum_i F_i / lambda_min(g)),
  /// c the scheme's SSP coefficient.
  double dt_safety = 0.2;
  double t_max = 50.0;
  double tol_converge = 1e-8;
  /// Slack on F - f >= 0 and on monotonicity; barrier slack is 10x this.
  double tol_sign = 1e-10;
  int monitor_every = 1;
  int max_halvings = 20;
  /// Ceilings on max vtilde and max kappa_n, as multiples of the initial values.
  double ceiling_factor = 10.0;
  /// Steps are rejected when min H_2 falls below this.
  double admissibility_margin = 1e-8;
  GeometryOptions geometry;

  GraphFunction lower;
  GraphFunction upper;
};

/// Per-node quantities derived from the geometry and the target.
struct NodeEvaluation {
  std::vector<double> h2;        ///< H_2(kappa)
  std::vector<double> sigma2;    ///< sqrt(H_2)
  std::vector<double> target;    ///< f_eff at (u(x), x) with the node's normal
  std::vector<double> velocity;  ///< -e^{-psi} v (sigma_2 - f_eff)
  /// v^2 sum_i F_i / lambda_min(g), the dt controller's diffusion scale.
  std::vector<double> diffusion;
  /// First node outside Gamma_2 or below the admissibility margin.
  std::optional<std::size_t> inadmissible;
  double min_h2 = 0.0;
};

struct FlowState {
  double t = 0.0;
  GraphFunction u;
  SurfaceGeometry geometry;
  NodeEvaluation eval;
  double dt_current = 0.0;
  std::size_t steps = 0;
  std::size_t rejected_steps = 0;
};

struct TraceRow {
  double t = 0.0;
  double sup_res = 0.0;  ///< sup |F - f|
  double min_res = 0.0;  ///< min (F - f)
  double max_vtilde = 0.0;
  double max_kappa = 0.0;
  double min_h2 = 0.0;
  double u_min = 0.0;
  double u_max = 0.0;
  double dt = 0.0;
};

/// Append-only; rows have nondecreasing t.
class FlowTrace {
 public:
  void append(const TraceRow& row);
  const std::vector<TraceRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  /// Header t,sup_res,min_res,max_vtilde,max_kappa,min_H2,u_min,u_max,dt; %.17g values.
  void write_csv(std::ostream& out) const;

 private:
  std::vector<TraceRow> rows_;
};

enum class Verdict { Converged, Timeout, Breakdown, InvariantViolation };

std::string to_string(Verdict verdict);

/// Running extremes of the monitored quantities over all accepted states.
struct MonitorSummary {
  double min_res = 0.0;
  double max_increase = 0.0;  ///< max over steps and nodes of u_new - u_old
  double max_vtilde = 0.0;
  double max_kappa = 0.0;
  double vtilde_ceiling = 0.0;
  double kappa_ceiling = 0.0;
  double barrier_excess = 0.0;  ///< max of u - u_2 and u_1 - u
};

struct FlowResult {
  Verdict verdict = Verdict::Timeout;
  std::string message;
  FlowState state;
  FlowTrace trace;
  MonitorSummary monitors;
  double wall_seconds = 0.0;
  double cutoff_k = 0.0;
  /// max vtilde <= k over the whole run: the cutoff never engaged.
  bool cutoff_inactive = false;
};

/// Checks barriers and builds the initial state u = u_2 at t = 0.
/// Throws ConfigError for malformed barriers, InvalidBarrierError when u_2 is
/// not admissible, F < f on u_2, or F > f on an admissible part of u_1, and
/// PositivityViolation when the target is not positive on u_2.
FlowState initialize(const FlowConfig& config, const AmbientMetric& metric,
                     const EffectiveRhs& f);

/// Evaluates sigma_2, f_eff, velocity and the diffusion scale on `geometry`.
void evaluate_nodes(const GraphFunction& u, const SurfaceGeometry& geometry,
                    const EffectiveRhs& f, const FlowConfig& config, NodeEvaluation& out);

/// SSP coefficient of the configured scheme.
double ssp_coefficient(const FlowConfig& config);

/// Stable step size for the state's geometry.
double stable_dt(const FlowState& state, const FlowConfig& config);

/// One accepted time step, halving dt on spacelike or admissibility failure.
/// Throws FlowBreakdown after config.max_halvings halvings.
void step(FlowState& state, const FlowConfig& config, const AmbientMetric& metric,
          const EffectiveRhs& f);

/// Steps until convergence, timeout, breakdown or a monitor violation.
FlowResult run(const FlowConfig& config, const AmbientMetric& metric, const EffectiveRhs& f);

/// Key-value run report.
void write_run_report(std::ostream& out, const FlowResult& result, const GrowthAudit* audit);

}  // namespace scflow

#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "scflow/ambient.hpp"
#include "scflow/grid.hpp"

namespace scflow {

struct GeometryOptions {
  /// Reject any node with |Du|^2 > 1 - spacelike_margin.
  double spacelike_margin = 1e-6;
  /// Compare g^{-1} against its closed form and record the gap.
  bool audit_inverse = true;
};

/// Per-node geometry of graph u. Principal curvatures are taken with respect
/// to the past-directed normal and sorted ascending.
///
/// Tensor fields store row-major n x n blocks per node.
struct SurfaceGeometry {
  int dim = 0;
  std::shared_ptr<const GridChart> chart;
  bool has_second_order = false;

  NodeField gradient;        ///< u_i
  NodeField gradient_sq;     ///< sigma^{ij} u_i u_j
  NodeField v;               ///< sqrt(1 - |Du|^2)
  NodeField vtilde;          ///< 1 / v
  NodeField psi;             ///< psi at (u(x), x)
  NodeField metric;          ///< g_ij
  NodeField inverse_metric;  ///< g^{ij}, direct inversion
  NodeField normal;          ///< past-directed nu^alpha, n + 1 components
  NodeField ambient_gamma0;  ///< Gamma^0_00, Gamma^0_0i, Gamma^0_ij at (u(x), x)

  NodeField second_form;     ///< h_ij
  NodeField shape_operator;  ///< h^i_j = g^{ik} h_kj
  NodeField kappa;           ///< ascending principal curvatures

  /// Largest relative gap between the closed-form inverse
  /// e^{-2 psi}(sigma^{ij} + u^i u^j / v^2) and direct inversion.
  double inverse_closed_form_gap = 0.0;

  std::size_t size() const { return v.nodes(); }

  SpatialMatrix metric_at(std::size_t node) const;
  SpatialMatrix inverse_metric_at(std::size_t node) const;
  SpatialMatrix second_form_at(std::size_t node) const;
  SpatialMatrix shape_operator_at(std::size_t node) const;
  SpatialVector gradient_at(std::size_t node) const;
  SpatialVector kappa_at(std::size_t node) const;
  SpacetimeVector normal_at(std::size_t node) const;
};

/// g_ij, g^{ij}, v, past normal and the ambient data they need.
/// Throws SpacelikeViolation naming the first offending node.
SurfaceGeometry induced_metric(const GraphFunction& u, const AmbientMetric& metric,
                               const GeometryOptions& options = {});

/// Past-directed unit normal nu = -v^{-1} e^{-psi} (1, u^i), n + 1 components per node.
NodeField past_normal(const GraphFunction& u, const AmbientMetric& metric,
                      const GeometryOptions& options = {});

/// Full first- and second-order geometry: h_ij from the graph formula with
/// the Hessian taken in the induced metric, and principal curvatures from the
/// pencil (h, g).
SurfaceGeometry second_fundamental_form(const GraphFunction& u, const AmbientMetric& metric,
                                        const GeometryOptions& options = {});

/// Same as second_fundamental_form; reuses the storage of `out`.
void compute_geometry(const GraphFunction& u, const AmbientMetric& metric,
                      const GeometryOptions& options, SurfaceGeometry& out);

inline SurfaceGeometry compute_geometry(const GraphFunction& u, const AmbientMetric& metric,
                                        const GeometryOptions& options = {}) {
  return second_fundamental_form(u, metric, options);
}

/// Pointwise max_{i,j,k} |h_ij;k - h_ik;j - Rbar(nu, x_i, x_j, x_k)|.
/// Requires a metric with a curvature oracle.
std::vector<double> codazzi_residual(const GraphFunction& u, const AmbientMetric& metric,
                                     const GeometryOptions& options = {});

/// Intrinsic scalar curvature of the discrete induced metric.
std::vector<double> scalar_curvature(const SurfaceGeometry& geometry);

/// Pointwise |R + (H^2 - |A|^2) - Rbar - 2 Ric(nu, nu)|. Requires a curvature oracle.
std::vector<double> gauss_scalar_residual(const GraphFunction& u, const AmbientMetric& metric,
                                          const GeometryOptions& options = {});

/// Reference-metric length of a g-unit tangent vector xi at `node`,
/// e^{2 psi} (u_i u_j + sigma_ij) xi^i xi^j. Throws ContractViolation when
/// xi is not g-unit and DegenerateGeometryError when the value disagrees
/// with 1 + 2 e^{2 psi} (u_i xi^i)^2 beyond 1e-10.
double tangent_norm_identity(const GraphFunction& u, const AmbientMetric& metric,
                             const SurfaceGeometry& geometry, std::size_t node,
                             const SpatialVector& xi);

/// Worst-case violations of the pointwise identities the geometry satisfies.
struct GeometryDiagnostics {
  double unit_normal = 0.0;        ///< |gbar(nu, nu) + 1|
  double vtilde_identity = 0.0;    ///< |eta_alpha nu^alpha - 1/v|
  double inverse_identity = 0.0;   ///< |g^{ik} g_kj - delta|
  double inverse_closed_form = 0.0;
  double trace = 0.0;              ///< |sum kappa - g^{ij} h_ij|
  double trace_squares = 0.0;      ///< |sum kappa^2 - h^i_j h^j_i|
  bool past_directed = true;       ///< nu^0 < 0 everywhere
};
GeometryDiagnostics diagnose(const GraphFunction& u, const AmbientMetric& metric,
                             const SurfaceGeometry& geometry);

}  // namespace scflow

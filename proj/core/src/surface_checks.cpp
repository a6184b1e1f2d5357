#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/LU>

#include "scflow/errors.hpp"
#include "scflow/surface.hpp"

namespace scflow {

namespace {

/// Gamma^m_ij of the induced metric at `node`, from centred differences of
/// the discrete g field.
class InducedConnection {
 public:
  InducedConnection(const SurfaceGeometry& geo, std::size_t node) : n_(geo.dim) {
    const GridChart& chart = *geo.chart;
    std::array<SpatialMatrix, kMaxDim> dg;
    for (int a = 0; a < n_; ++a) {
      dg[a] = (geo.metric_at(chart.plus(node, a)) - geo.metric_at(chart.minus(node, a))) /
              (2.0 * chart.spacing()[a]);
    }
    const SpatialMatrix ginv = geo.inverse_metric_at(node);
    for (int m = 0; m < n_; ++m)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
          double c = 0.0;
          for (int l = 0; l < n_; ++l) c += ginv(m, l) * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
          (*this)(m, i, j) = 0.5 * c;
        }
  }

  double& operator()(int m, int i, int j) { return data_[(m * n_ + i) * n_ + j]; }
  double operator()(int m, int i, int j) const { return data_[(m * n_ + i) * n_ + j]; }

 private:
  int n_;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

SpacetimeVector point_at(const GraphFunction& u, std::size_t node) {
  const int n = u.chart->dim();
  SpacetimeVector p(n + 1);
  p[0] = u.values[node];
  p.tail(n) = u.chart->coordinates(node);
  return p;
}

/// x_i^alpha = (u_i, delta_i^j).
SpacetimeVector tangent(const SurfaceGeometry& geo, std::size_t node, int i) {
  SpacetimeVector t = SpacetimeVector::Zero(geo.dim + 1);
  t[0] = geo.gradient[node][i];
  t[i + 1] = 1.0;
  return t;
}

double contract(const RiemannTensor& r, const SpacetimeVector& a, const SpacetimeVector& b,
                const SpacetimeVector& c, const SpacetimeVector& d) {
  const int dim = r.spacetime_dim();
  double acc = 0.0;
  for (int p = 0; p < dim; ++p) {
    if (a[p] == 0.0) continue;
    for (int q = 0; q < dim; ++q) {
      if (b[q] == 0.0) continue;
      for (int s = 0; s < dim; ++s) {
        if (c[s] == 0.0) continue;
        for (int t = 0; t < dim; ++t) acc += r(p, q, s, t) * a[p] * b[q] * c[s] * d[t];
      }
    }
  }
  return acc;
}

void require_oracle(const AmbientMetric& metric, const char* check) {
  if (!metric.has_curvature_oracle()) {
    throw UnsupportedCheckError(std::string(check) + " needs an ambient curvature oracle; metric '" +
                                metric.name() + "' has none");
  }
}

}  // namespace

std::vector<double> codazzi_residual(const GraphFunction& u, const AmbientMetric& metric,
                                     const GeometryOptions& options) {
  require_oracle(metric, "codazzi_residual");
  const SurfaceGeometry geo = second_fundamental_form(u, metric, options);
  const GridChart& chart = *u.chart;
  const int n = geo.dim;
  std::vector<double> residual(chart.size(), 0.0);

  for (std::size_t k = 0; k < chart.size(); ++k) {
    const InducedConnection gamma(geo, k);
    const SpatialMatrix h = geo.second_form_at(k);
    std::array<SpatialMatrix, kMaxDim> dh;
    for (int a = 0; a < n; ++a) {
      dh[a] = (geo.second_form_at(chart.plus(k, a)) - geo.second_form_at(chart.minus(k, a))) /
              (2.0 * chart.spacing()[a]);
    }
    // cov(i, j, c) = h_{ij;c}
    auto cov = [&](int i, int j, int c) {
      double r = dh[c](i, j);
      for (int m = 0; m < n; ++m) r -= gamma(m, c, i) * h(m, j) + gamma(m, c, j) * h(i, m);
      return r;
    };

    const auto rbar = metric.riemann(point_at(u, k));
    const SpacetimeVector nu = geo.normal_at(k);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < n; ++c) {
          double r = cov(i, j, c) - cov(i, c, j);
          r -= contract(*rbar, nu, tangent(geo, k, i), tangent(geo, k, j), tangent(geo, k, c));
          worst = std::max(worst, std::abs(r));
        }
    residual[k] = worst;
  }
  return residual;
}

std::vector<double> scalar_curvature(const SurfaceGeometry& geo) {
  const GridChart& chart = *geo.chart;
  const int n = geo.dim;
  const int n3 = n * n * n;
  NodeField connection(chart.size(), n3);
  for (std::size_t k = 0; k < chart.size(); ++k) {
    const InducedConnection gamma(geo, k);
    auto out = connection[k];
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[(m * n + i) * n + j] = gamma(m, i, j);
  }

  std::vector<double> scalar(chart.size(), 0.0);
  for (std::size_t k = 0; k < chart.size(); ++k) {
    auto G = [&](int m, int i, int j) { return connection[k][(m * n + i) * n + j]; };
    // dG(a, m, i, j) = d_a Gamma^m_ij
    auto dG = [&](int a, int m, int i, int j) {
      const int idx = (m * n + i) * n + j;
      return (connection[chart.plus(k, a)][idx] - connection[chart.minus(k, a)][idx]) /
             (2.0 * chart.spacing()[a]);
    };
    const SpatialMatrix ginv = geo.inverse_metric_at(k);
    double r = 0.0;
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        // R_jl = d_i Gamma^i_jl - d_l Gamma^i_ij + Gamma^i_ip Gamma^p_jl - Gamma^i_lp Gamma^p_ij
        double ric = 0.0;
        for (int i = 0; i < n; ++i) {
          ric += dG(i, i, j, l) - dG(l, i, i, j);
          for (int p = 0; p < n; ++p) ric += G(i, i, p) * G(p, j, l) - G(i, l, p) * G(p, i, j);
        }
        r += ginv(j, l) * ric;
      }
    scalar[k] = r;
  }
  return scalar;
}

std::vector<double> gauss_scalar_residual(const GraphFunction& u, const AmbientMetric& metric,
                                          const GeometryOptions& options) {
  require_oracle(metric, "gauss_scalar_check");
  const SurfaceGeometry geo = second_fundamental_form(u, metric, options);
  const std::vector<double> intrinsic = scalar_curvature(geo);
  const int d = geo.dim + 1;
  std::vector<double> residual(geo.size(), 0.0);

  for (std::size_t k = 0; k < geo.size(); ++k) {
    const SpacetimeVector p = point_at(u, k);
    const RiemannTensor rbar = *metric.riemann(p);
    const SpacetimeMatrix ginv = metric.lorentz_metric(p).inverse();
    const SpacetimeVector nu = geo.normal_at(k);

    double ambient_scalar = 0.0;
    double ricci_nn = 0.0;
    for (int a = 0; a < d; ++a)
      for (int c = 0; c < d; ++c) {
        if (ginv(a, c) == 0.0) continue;
        for (int b = 0; b < d; ++b)
          for (int e = 0; e < d; ++e) {
            ambient_scalar += ginv(a, c) * ginv(b, e) * rbar(a, b, c, e);
            ricci_nn += ginv(a, c) * rbar(a, b, c, e) * nu[b] * nu[e];
          }
      }

    const SpatialMatrix shape = geo.shape_operator_at(k);
    const double H = shape.trace();
    const double A2 = (shape * shape).trace();
    const double predicted = -(H * H - A2) + ambient_scalar + 2.0 * ricci_nn;
    residual[k] = std::abs(intrinsic[k] - predicted);
  }
  return residual;
}

double tangent_norm_identity(const GraphFunction& u, const AmbientMetric& metric,
                             const SurfaceGeometry& geometry, std::size_t node,
                             const SpatialVector& xi) {
  const int n = geometry.dim;
  if (xi.size() != n) throw ContractViolation("tangent vector dimension mismatch");
  const SpatialMatrix g = geometry.metric_at(node);
  const double unit = xi.dot(g * xi);
  if (std::abs(unit - 1.0) > 1e-10) {
    throw ContractViolation("tangent vector is not g-unit: g(xi, xi) = " + std::to_string(unit));
  }
  const MetricSample s = metric.sample(point_at(u, node));
  const SpatialVector du = geometry.gradient_at(node);
  const double e2psi = std::exp(2.0 * s.psi);
  const SpatialMatrix reference = e2psi * (du * du.transpose() + s.sigma);
  const double value = xi.dot(reference * xi);
  const double slope = du.dot(xi);
  const double predicted = 1.0 + 2.0 * e2psi * slope * slope;
  if (std::abs(value - predicted) > 1e-10 * std::max(1.0, std::abs(predicted))) {
    throw DegenerateGeometryError("tangent norm identity failed at node " + std::to_string(node));
  }
  return value;
}

GeometryDiagnostics diagnose(const GraphFunction& u, const AmbientMetric& metric,
                             const SurfaceGeometry& geo) {
  GeometryDiagnostics d;
  d.inverse_closed_form = geo.inverse_closed_form_gap;
  const int n = geo.dim;
  for (std::size_t k = 0; k < geo.size(); ++k) {
    const MetricSample s = metric.sample(point_at(u, k));
    const SpacetimeVector nu = geo.normal_at(k);
    d.unit_normal = std::max(d.unit_normal, std::abs(lorentz_inner(s, nu, nu) + 1.0));
    const double eta_nu = -std::exp(s.psi) * nu[0];
    d.vtilde_identity = std::max(d.vtilde_identity, std::abs(eta_nu - geo.vtilde[k][0]));
    if (!(nu[0] < 0.0)) d.past_directed = false;

    const SpatialMatrix g = geo.metric_at(k);
    const SpatialMatrix ginv = geo.inverse_metric_at(k);
    d.inverse_identity = std::max(
        d.inverse_identity, (ginv * g - SpatialMatrix::Identity(n, n)).cwiseAbs().maxCoeff());

    if (geo.has_second_order) {
      const SpatialMatrix shape = geo.shape_operator_at(k);
      const SpatialVector kappa = geo.kappa_at(k);
      const double contracted = (ginv.cwiseProduct(geo.second_form_at(k))).sum();
      d.trace = std::max(d.trace, std::abs(kappa.sum() - contracted));
      d.trace_squares =
          std::max(d.trace_squares, std::abs(kappa.squaredNorm() - (shape * shape).trace()));
    }
  }
  return d;
}

}  // namespace scflow

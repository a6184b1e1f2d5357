#include "scflow/surface.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "scflow/errors.hpp"

namespace scflow {

namespace {

template <int N>
using Mat = Eigen::Matrix<double, N, N, Eigen::RowMajor>;
template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

template <int N>
Eigen::Map<const Mat<N>> block(const NodeField& f, std::size_t node) {
  return Eigen::Map<const Mat<N>>(f[node].data());
}

void allocate(SurfaceGeometry& geo, const GridChart& chart, bool second_order) {
  const int n = chart.dim();
  const std::size_t size = chart.size();
  if (geo.dim != n || geo.size() != size) {
    geo.dim = n;
    geo.gradient = NodeField(size, n);
    geo.gradient_sq = NodeField(size, 1);
    geo.v = NodeField(size, 1);
    geo.vtilde = NodeField(size, 1);
    geo.psi = NodeField(size, 1);
    geo.metric = NodeField(size, n * n);
    geo.inverse_metric = NodeField(size, n * n);
    geo.normal = NodeField(size, n + 1);
    geo.ambient_gamma0 = NodeField(size, 1 + n + n * n);
    geo.second_form = NodeField();
    geo.shape_operator = NodeField();
    geo.kappa = NodeField();
  }
  if (second_order && geo.kappa.nodes() != size) {
    geo.second_form = NodeField(size, n * n);
    geo.shape_operator = NodeField(size, n * n);
    geo.kappa = NodeField(size, n);
  }
  geo.has_second_order = false;
}

template <int N>
void first_order_pass(const GraphFunction& u, const AmbientMetric& metric, bool audit_inverse,
                      SurfaceGeometry& geo) {
  const GridChart& chart = *u.chart;
  const auto size = static_cast<std::ptrdiff_t>(chart.size());
  const double* values = u.values.data();
  std::array<double, N> inv2h;
  for (int a = 0; a < N; ++a) inv2h[a] = 0.5 / chart.spacing()[a];

  double gap = 0.0;
#pragma omp parallel reduction(max : gap)
  {
    MetricSample s;
    s.resize(N);
    SpacetimeVector point(N + 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < size; ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      Vec<N> du;
      for (int a = 0; a < N; ++a) {
        du[a] = (values[chart.plus(k, a)] - values[chart.minus(k, a)]) * inv2h[a];
      }
      point[0] = values[k];
      for (int a = 0; a < N; ++a) point[a + 1] = chart.coordinate(k, a);
      metric.sample(point, s);

      const Mat<N> sigma = s.sigma;
      const Mat<N> sigma_inv = sigma.inverse();
      const Vec<N> up = sigma_inv * du;
      const double grad_sq = du.dot(up);
      const double v = std::sqrt(std::max(1.0 - grad_sq, std::numeric_limits<double>::min()));
      const double epsi = std::exp(s.psi);
      const double e2psi = epsi * epsi;
      const double em_psi = 1.0 / epsi;

      const Mat<N> g = e2psi * (sigma - du * du.transpose());
      const Mat<N> ginv = g.inverse();
      if (audit_inverse) {
        const Mat<N> closed = (sigma_inv + (up * up.transpose()) / (v * v)) / e2psi;
        const double scale = std::max(1.0, ginv.cwiseAbs().maxCoeff());
        gap = std::max(gap, (closed - ginv).cwiseAbs().maxCoeff() / scale);
      }

      Eigen::Map<Vec<N>>(geo.gradient[k].data()) = du;
      geo.gradient_sq[k][0] = grad_sq;
      geo.v[k][0] = v;
      geo.vtilde[k][0] = 1.0 / v;
      geo.psi[k][0] = s.psi;
      Eigen::Map<Mat<N>>(geo.metric[k].data()) = g;
      Eigen::Map<Mat<N>>(geo.inverse_metric[k].data()) = ginv;

      auto nu = geo.normal[k];
      const double factor = -em_psi / v;
      nu[0] = factor;
      for (int a = 0; a < N; ++a) nu[a + 1] = factor * up[a];

      auto gamma0 = geo.ambient_gamma0[k];
      gamma0[0] = s.dpsi[0];
      for (int a = 0; a < N; ++a) gamma0[1 + a] = s.dpsi[a + 1];
      Eigen::Map<Mat<N>>(gamma0.data() + 1 + N) =
          s.dpsi[0] * sigma + 0.5 * Mat<N>(s.dsigma[0]);
    }
  }
  geo.inverse_closed_form_gap = gap;
}

template <int N>
void second_order_pass(const GraphFunction& u, SurfaceGeometry& geo,
                       std::vector<std::uint8_t>& degenerate) {
  const GridChart& chart = *u.chart;
  const auto size = static_cast<std::ptrdiff_t>(chart.size());
  const double* values = u.values.data();
  std::array<double, N> inv2h, invh2;
  for (int a = 0; a < N; ++a) {
    inv2h[a] = 0.5 / chart.spacing()[a];
    invh2[a] = 1.0 / (chart.spacing()[a] * chart.spacing()[a]);
  }
  degenerate.assign(chart.size(), 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < size; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    const Mat<N> ginv = block<N>(geo.inverse_metric, k);
    const Vec<N> du = Eigen::Map<const Vec<N>>(geo.gradient[k].data());

    std::array<Mat<N>, N> dg;
    for (int a = 0; a < N; ++a) {
      dg[a] = (block<N>(geo.metric, chart.plus(k, a)) - block<N>(geo.metric, chart.minus(k, a))) *
              inv2h[a];
    }

    // Gamma^m_ij u_m = w^l Gamma_{l,ij} with w = g^{-1} Du.
    const Vec<N> w = ginv * du;
    Mat<N> hess;
    const double uk = values[k];
    for (int i = 0; i < N; ++i) {
      const std::size_t ip = chart.plus(k, i), im = chart.minus(k, i);
      hess(i, i) = (values[ip] - 2.0 * uk + values[im]) * invh2[i];
      for (int j = i + 1; j < N; ++j) {
        const double upp = values[chart.plus(ip, j)], upm = values[chart.minus(ip, j)];
        const double ump = values[chart.plus(im, j)], umm = values[chart.minus(im, j)];
        hess(i, j) = hess(j, i) = (upp - upm - ump + umm) * (inv2h[i] * inv2h[j]);
      }
    }
    for (int i = 0; i < N; ++i) {
      for (int j = i; j < N; ++j) {
        double c = 0.0;
        for (int l = 0; l < N; ++l) c += w[l] * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
        hess(i, j) -= 0.5 * c;
        if (j != i) hess(j, i) = hess(i, j);
      }
    }

    const auto gamma0 = geo.ambient_gamma0[k];
    const double g000 = gamma0[0];
    const Vec<N> g00 = Eigen::Map<const Vec<N>>(gamma0.data() + 1);
    const Mat<N> g0ij = Eigen::Map<const Mat<N>>(gamma0.data() + 1 + N);
    // e^psi v = -1 / nu^0
    const double scale = -1.0 / geo.normal[k][0];
    const Mat<N> h = -scale * (hess + g000 * du * du.transpose() + du * g00.transpose() +
                               g00 * du.transpose() + g0ij);
    const Mat<N> shape = ginv * h;
    Eigen::Map<Mat<N>>(geo.second_form[k].data()) = h;
    Eigen::Map<Mat<N>>(geo.shape_operator[k].data()) = shape;

    auto kappa = geo.kappa[k];
    if constexpr (N == 2) {
      const double mean = 0.5 * (shape(0, 0) + shape(1, 1));
      const double det = shape(0, 0) * shape(1, 1) - shape(0, 1) * shape(1, 0);
      const double root = std::sqrt(std::max(mean * mean - det, 0.0));
      kappa[0] = mean - root;
      kappa[1] = mean + root;
      if (!std::isfinite(kappa[0]) || !std::isfinite(kappa[1])) degenerate[k] = 1;
    } else {
      const Mat<N> g = block<N>(geo.metric, k);
      Eigen::LLT<Eigen::Matrix<double, N, N>> llt(g);
      if (llt.info() != Eigen::Success) {
        degenerate[k] = 1;
        continue;
      }
      const Eigen::Matrix<double, N, N> x = llt.matrixL().solve(Eigen::Matrix<double, N, N>(h));
      Eigen::Matrix<double, N, N> c = llt.matrixL().solve(x.transpose());
      c = 0.5 * (c + c.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(c, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) {
        degenerate[k] = 1;
        continue;
      }
      for (int i = 0; i < N; ++i) kappa[i] = es.eigenvalues()[i];
    }
  }
}

void check_spacelike(const SurfaceGeometry& geo, const GeometryOptions& options) {
  const double limit = 1.0 - options.spacelike_margin;
  for (std::size_t k = 0; k < geo.size(); ++k) {
    const double q = geo.gradient_sq[k][0];
    if (!(q <= limit)) throw SpacelikeViolation(k, q);
  }
}

void check_input(const GraphFunction& u, const AmbientMetric& metric) {
  if (!u.chart) throw ContractViolation("graph function has no chart");
  if (u.values.size() != u.chart->size()) throw ContractViolation("graph function size mismatch");
  if (u.chart->dim() != metric.dim()) {
    throw ContractViolation("grid dimension " + std::to_string(u.chart->dim()) +
                            " does not match metric dimension " + std::to_string(metric.dim()));
  }
  for (double x : u.values) {
    if (!std::isfinite(x)) throw ContractViolation("graph function has non-finite values");
  }
}

void run_first_order(const GraphFunction& u, const AmbientMetric& metric,
                     const GeometryOptions& options, SurfaceGeometry& geo, bool second) {
  check_input(u, metric);
  allocate(geo, *u.chart, second);
  geo.chart = u.chart;
  switch (u.chart->dim()) {
    case 2: first_order_pass<2>(u, metric, options.audit_inverse, geo); break;
    case 3: first_order_pass<3>(u, metric, options.audit_inverse, geo); break;
    case 4: first_order_pass<4>(u, metric, options.audit_inverse, geo); break;
    default: throw ContractViolation("unsupported dimension");
  }
  check_spacelike(geo, options);
}

}  // namespace

SpatialMatrix SurfaceGeometry::metric_at(std::size_t node) const {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      metric[node].data(), dim, dim);
}
SpatialMatrix SurfaceGeometry::inverse_metric_at(std::size_t node) const {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      inverse_metric[node].data(), dim, dim);
}
SpatialMatrix SurfaceGeometry::second_form_at(std::size_t node) const {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      second_form[node].data(), dim, dim);
}
SpatialMatrix SurfaceGeometry::shape_operator_at(std::size_t node) const {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      shape_operator[node].data(), dim, dim);
}
SpatialVector SurfaceGeometry::gradient_at(std::size_t node) const {
  return Eigen::Map<const Eigen::VectorXd>(gradient[node].data(), dim);
}
SpatialVector SurfaceGeometry::kappa_at(std::size_t node) const {
  return Eigen::Map<const Eigen::VectorXd>(kappa[node].data(), dim);
}
SpacetimeVector SurfaceGeometry::normal_at(std::size_t node) const {
  return Eigen::Map<const Eigen::VectorXd>(normal[node].data(), dim + 1);
}

SurfaceGeometry induced_metric(const GraphFunction& u, const AmbientMetric& metric,
                               const GeometryOptions& options) {
  SurfaceGeometry geo;
  run_first_order(u, metric, options, geo, false);
  return geo;
}

NodeField past_normal(const GraphFunction& u, const AmbientMetric& metric,
                      const GeometryOptions& options) {
  return induced_metric(u, metric, options).normal;
}

void compute_geometry(const GraphFunction& u, const AmbientMetric& metric,
                      const GeometryOptions& options, SurfaceGeometry& geo) {
  run_first_order(u, metric, options, geo, true);
  std::vector<std::uint8_t> degenerate;
  switch (u.chart->dim()) {
    case 2: second_order_pass<2>(u, geo, degenerate); break;
    case 3: second_order_pass<3>(u, geo, degenerate); break;
    case 4: second_order_pass<4>(u, geo, degenerate); break;
    default: throw ContractViolation("unsupported dimension");
  }
  for (std::size_t k = 0; k < degenerate.size(); ++k) {
    if (degenerate[k]) {
      throw DegenerateGeometryError("principal curvature eigenproblem failed at node " +
                                    std::to_string(k));
    }
  }
  geo.has_second_order = true;
}

SurfaceGeometry second_fundamental_form(const GraphFunction& u, const AmbientMetric& metric,
                                        const GeometryOptions& options) {
  SurfaceGeometry geo;
  compute_geometry(u, metric, options, geo);
  return geo;
}

}  // namespace scflow

#include "scflow/ambient.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "scflow/errors.hpp"

namespace scflow {

void MetricSample::resize(int n) {
  source = nullptr;
  psi = 0.0;
  dpsi.setZero(n + 1);
  sigma.setIdentity(n, n);
  for (int a = 0; a <= n; ++a) dsigma[a].setZero(n, n);
}

RiemannTensor::RiemannTensor(int spacetime_dim)
    : dim_(spacetime_dim),
      data_(static_cast<std::size_t>(spacetime_dim) * spacetime_dim * spacetime_dim *
                spacetime_dim,
            0.0) {}

ChristoffelTable::ChristoffelTable(int spacetime_dim) : dim_(spacetime_dim) {}

AmbientMetric::AmbientMetric(int dim, std::string name) : dim_(dim), name_(std::move(name)) {
  if (dim < 2 || dim > kMaxDim) {
    throw ConfigError("spatial dimension must lie in [2, " + std::to_string(kMaxDim) +
                      "], got " + std::to_string(dim));
  }
}

std::optional<RiemannTensor> AmbientMetric::riemann(const SpacetimeVector&) const {
  return std::nullopt;
}

void AmbientMetric::sample(const SpacetimeVector& point, MetricSample& out) const {
  if (out.source != this || out.sigma.rows() != dim_) {
    out.resize(dim_);
    out.source = this;
  }
  evaluate(point, out);
}

MetricSample AmbientMetric::sample(const SpacetimeVector& point) const {
  MetricSample s;
  sample(point, s);
  return s;
}

SpacetimeMatrix AmbientMetric::lorentz_metric(const SpacetimeVector& point) const {
  const MetricSample s = sample(point);
  const int n = dim_;
  SpacetimeMatrix g = SpacetimeMatrix::Zero(n + 1, n + 1);
  const double w = std::exp(2.0 * s.psi);
  g(0, 0) = -w;
  g.bottomRightCorner(n, n) = w * s.sigma;
  return g;
}

namespace {

void check_point(const AmbientMetric& m, const SpacetimeVector& p) {
  if (p.size() != m.dim() + 1) {
    throw ContractViolation("spacetime point has " + std::to_string(p.size()) +
                            " components, expected " + std::to_string(m.dim() + 1));
  }
  for (int a = 0; a < p.size(); ++a) {
    if (!std::isfinite(p[a])) throw ContractViolation("non-finite spacetime coordinate");
  }
}

void require_positive_definite(const SpatialMatrix& sigma) {
  Eigen::LLT<SpatialMatrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw DegenerateMetricError("sigma_ij is not positive definite");
  }
}

RiemannTensor constant_curvature(const SpacetimeMatrix& g, double K) {
  const int d = static_cast<int>(g.rows());
  RiemannTensor r(d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) r(a, b, c, e) = K * (g(a, c) * g(b, e) - g(a, e) * g(b, c));
  return r;
}

class FlatStatic final : public AmbientMetric {
 public:
  explicit FlatStatic(int n) : AmbientMetric(n, "flat-static") {}

  void evaluate(const SpacetimeVector&, MetricSample&) const override {}

  bool has_curvature_oracle() const override { return true; }
  std::optional<RiemannTensor> riemann(const SpacetimeVector&) const override {
    return RiemannTensor(dim() + 1);
  }
};

/// psi = 0, sigma = e^{-2 r x^0} delta. Constant curvature r^2 (de Sitter
/// in a contracting chart).
class ExpWarp final : public AmbientMetric {
 public:
  ExpWarp(int n, double rate) : AmbientMetric(n, "exp-warp"), rate_(rate) {}

  void evaluate(const SpacetimeVector& p, MetricSample& out) const override {
    const double w = std::exp(-2.0 * rate_ * p[0]);
    for (int i = 0; i < dim(); ++i) {
      out.sigma(i, i) = w;
      out.dsigma[0](i, i) = -2.0 * rate_ * w;
    }
  }

  bool has_curvature_oracle() const override { return true; }
  std::optional<RiemannTensor> riemann(const SpacetimeVector& p) const override {
    return constant_curvature(lorentz_metric(p), rate_ * rate_);
  }

 private:
  double rate_;
};

/// psi = a x^0, sigma = delta.
class ConformalLinear final : public AmbientMetric {
 public:
  ConformalLinear(int n, double a) : AmbientMetric(n, "custom:conformal-linear"), a_(a) {}

  void evaluate(const SpacetimeVector& p, MetricSample& out) const override {
    out.psi = a_ * p[0];
    out.dpsi[0] = a_;
  }

 private:
  double a_;
};

/// psi = 0, sigma = diag(e^{2 p_i x^0}).
class AnisotropicWarp final : public AmbientMetric {
 public:
  AnisotropicWarp(int n, std::vector<double> rates)
      : AmbientMetric(n, "custom:anisotropic-warp"), rates_(std::move(rates)) {}

  void evaluate(const SpacetimeVector& p, MetricSample& out) const override {
    for (int i = 0; i < dim(); ++i) {
      const double w = std::exp(2.0 * rates_[i] * p[0]);
      out.sigma(i, i) = w;
      out.dsigma[0](i, i) = 2.0 * rates_[i] * w;
    }
  }

 private:
  std::vector<double> rates_;
};

/// psi = eps sin(x^1), sigma = delta.
class LapseWave final : public AmbientMetric {
 public:
  LapseWave(int n, double eps) : AmbientMetric(n, "custom:lapse-wave"), eps_(eps) {}

  void evaluate(const SpacetimeVector& p, MetricSample& out) const override {
    out.psi = eps_ * std::sin(p[1]);
    out.dpsi[1] = eps_ * std::cos(p[1]);
  }

 private:
  double eps_;
};

/// psi = 0, sigma = delta + eps sin(x^0 + x^1) (E_12 + E_21).
class ShearWave final : public AmbientMetric {
 public:
  ShearWave(int n, double eps) : AmbientMetric(n, "custom:shear-wave"), eps_(eps) {}

  void evaluate(const SpacetimeVector& p, MetricSample& out) const override {
    const double s = eps_ * std::sin(p[0] + p[1]);
    const double c = eps_ * std::cos(p[0] + p[1]);
    out.sigma(0, 1) = out.sigma(1, 0) = s;
    out.dsigma[0](0, 1) = out.dsigma[0](1, 0) = c;
    out.dsigma[1](0, 1) = out.dsigma[1](1, 0) = c;
  }

 private:
  double eps_;
};

double param_or(const MetricPreset& preset, const std::string& key, double fallback) {
  auto it = preset.params.find(key);
  return it == preset.params.end() ? fallback : it->second;
}

void require_known_params(const MetricPreset& preset, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : preset.params) {
    if (!allowed.count(key)) {
      throw ConfigError("metric '" + preset.name + (preset.family.empty() ? "" : ":") +
                        preset.family + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw ConfigError("metric parameter '" + key + "' is not finite");
  }
}

}  // namespace

std::shared_ptr<const AmbientMetric> flat_static_metric(int dim) {
  return std::make_shared<FlatStatic>(dim);
}

std::shared_ptr<const AmbientMetric> exp_warp_metric(int dim, double rate) {
  return std::make_shared<ExpWarp>(dim, rate);
}

std::shared_ptr<const AmbientMetric> make_metric(const MetricPreset& preset, int dim) {
  if (preset.name == "flat-static") {
    require_known_params(preset, {});
    return flat_static_metric(dim);
  }
  if (preset.name == "exp-warp") {
    require_known_params(preset, {"rate"});
    return exp_warp_metric(dim, param_or(preset, "rate", 1.0));
  }
  if (preset.name != "custom") throw ConfigError("unknown metric preset '" + preset.name + "'");

  if (preset.family == "conformal-linear") {
    require_known_params(preset, {"a"});
    return std::make_shared<ConformalLinear>(dim, param_or(preset, "a", 1.0));
  }
  if (preset.family == "anisotropic-warp") {
    std::set<std::string> allowed;
    std::vector<double> rates(dim);
    for (int i = 0; i < dim; ++i) {
      const std::string key = "p" + std::to_string(i + 1);
      allowed.insert(key);
      rates[i] = param_or(preset, key, 0.0);
    }
    require_known_params(preset, allowed);
    return std::make_shared<AnisotropicWarp>(dim, std::move(rates));
  }
  if (preset.family == "lapse-wave") {
    require_known_params(preset, {"eps"});
    return std::make_shared<LapseWave>(dim, param_or(preset, "eps", 0.1));
  }
  if (preset.family == "shear-wave") {
    require_known_params(preset, {"eps"});
    const double eps = param_or(preset, "eps", 0.2);
    if (std::abs(eps) >= 1.0) throw ConfigError("shear-wave requires |eps| < 1");
    return std::make_shared<ShearWave>(dim, eps);
  }
  throw ConfigError("unknown custom metric family '" + preset.family + "'");
}

ChristoffelTable christoffel(const MetricSample& s) {
  const int n = static_cast<int>(s.sigma.rows());
  const int d = n + 1;
  require_positive_definite(s.sigma);

  SpacetimeMatrix G = SpacetimeMatrix::Zero(d, d);
  G(0, 0) = -1.0;
  G.bottomRightCorner(n, n) = s.sigma;
  SpacetimeMatrix Ginv = SpacetimeMatrix::Zero(d, d);
  Ginv(0, 0) = -1.0;
  Ginv.bottomRightCorner(n, n) = s.sigma.inverse();

  // dg[c](a, b) = d_c gbar_ab / e^{2 psi}
  std::array<SpacetimeMatrix, kMaxSpacetimeDim> dg;
  for (int c = 0; c < d; ++c) {
    dg[c] = 2.0 * s.dpsi[c] * G;
    dg[c].bottomRightCorner(n, n) += s.dsigma[c];
  }

  // The e^{2 psi} factors of gbar^{-1} and d gbar cancel.
  ChristoffelTable gamma(d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = b; c < d; ++c) {
        double acc = 0.0;
        for (int e = 0; e < d; ++e) {
          if (Ginv(a, e) == 0.0) continue;
          acc += Ginv(a, e) * (dg[b](e, c) + dg[c](e, b) - dg[e](b, c));
        }
        gamma(a, b, c) = gamma(a, c, b) = 0.5 * acc;
      }
  return gamma;
}

ChristoffelTable christoffel(const AmbientMetric& metric, const SpacetimeVector& point) {
  check_point(metric, point);
  return christoffel(metric.sample(point));
}

TimeChristoffels time_christoffels(const MetricSample& s) {
  const int n = static_cast<int>(s.sigma.rows());
  TimeChristoffels t;
  t.g000 = s.dpsi[0];
  t.g00i = s.dpsi.tail(n);
  t.g0ij = s.dpsi[0] * s.sigma + 0.5 * s.dsigma[0];
  return t;
}

SpatialMatrix slice_second_fundamental_form(const AmbientMetric& metric,
                                            const SpacetimeVector& point) {
  check_point(metric, point);
  const MetricSample s = metric.sample(point);
  return std::exp(s.psi) * (-0.5 * s.dsigma[0] - s.dpsi[0] * s.sigma);
}

SpatialVector slice_principal_curvatures(const AmbientMetric& metric,
                                         const SpacetimeVector& point) {
  const MetricSample s = metric.sample(point);
  require_positive_definite(s.sigma);
  const Eigen::MatrixXd hbar = slice_second_fundamental_form(metric, point);
  const Eigen::MatrixXd gslice = std::exp(2.0 * s.psi) * Eigen::MatrixXd(s.sigma);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(hbar, gslice,
                                                                   Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double reference_norm(const MetricSample& s, const SpacetimeVector& eta) {
  const int n = static_cast<int>(s.sigma.rows());
  const auto spatial = eta.tail(n);
  const double q = eta[0] * eta[0] + spatial.dot(s.sigma * spatial);
  return std::exp(s.psi) * std::sqrt(std::max(q, 0.0));
}

double reference_norm(const AmbientMetric& metric, const SpacetimeVector& point,
                      const SpacetimeVector& vector) {
  check_point(metric, point);
  if (vector.size() != point.size()) throw ContractViolation("vector/point dimension mismatch");
  return reference_norm(metric.sample(point), vector);
}

double reference_conorm(const MetricSample& s, const SpacetimeVector& omega) {
  const int n = static_cast<int>(s.sigma.rows());
  const auto spatial = omega.tail(n);
  const SpatialVector raised = s.sigma.ldlt().solve(SpatialVector(spatial));
  const double q = omega[0] * omega[0] + spatial.dot(raised);
  return std::exp(-s.psi) * std::sqrt(std::max(q, 0.0));
}

double lorentz_inner(const MetricSample& s, const SpacetimeVector& a, const SpacetimeVector& b) {
  const int n = static_cast<int>(s.sigma.rows());
  return std::exp(2.0 * s.psi) * (-a[0] * b[0] + a.tail(n).dot(s.sigma * b.tail(n)));
}

PartialsConsistency check_partials(const AmbientMetric& metric, const SpacetimeVector& point,
                                   double probe) {
  check_point(metric, point);
  const int d = metric.dim() + 1;
  const MetricSample s0 = metric.sample(point);
  PartialsConsistency out;
  for (int a = 0; a < d; ++a) {
    SpacetimeVector plus = point, minus = point;
    plus[a] += probe;
    minus[a] -= probe;
    const MetricSample sp = metric.sample(plus);
    const MetricSample sm = metric.sample(minus);
    const double dpsi = (sp.psi - sm.psi) / (2.0 * probe);
    out.psi_error = std::max(out.psi_error, std::abs(dpsi - s0.dpsi[a]));
    const SpatialMatrix dsig = (sp.sigma - sm.sigma) / (2.0 * probe);
    out.sigma_error = std::max(out.sigma_error, (dsig - s0.dsigma[a]).cwiseAbs().maxCoeff());
  }
  return out;
}

double metric_compatibility_residual(const AmbientMetric& metric, const SpacetimeVector& point,
                                     double probe) {
  check_point(metric, point);
  const int d = metric.dim() + 1;
  const SpacetimeMatrix g = metric.lorentz_metric(point);
  const ChristoffelTable gamma = christoffel(metric, point);
  double worst = 0.0;
  for (int c = 0; c < d; ++c) {
    SpacetimeVector plus = point, minus = point;
    plus[c] += probe;
    minus[c] -= probe;
    const SpacetimeMatrix dg =
        (metric.lorentz_metric(plus) - metric.lorentz_metric(minus)) / (2.0 * probe);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double r = dg(a, b);
        for (int e = 0; e < d; ++e) r -= gamma(e, c, a) * g(e, b) + gamma(e, c, b) * g(a, e);
        worst = std::max(worst, std::abs(r));
      }
  }
  return worst;
}

RiemannTensor finite_difference_riemann(const AmbientMetric& metric,
                                        const SpacetimeVector& point, double probe) {
  check_point(metric, point);
  const int d = metric.dim() + 1;
  const ChristoffelTable gamma = christoffel(metric, point);
  std::vector<ChristoffelTable> dgamma;  // dgamma[c] = d_c Gamma
  dgamma.reserve(d);
  for (int c = 0; c < d; ++c) {
    SpacetimeVector plus = point, minus = point;
    plus[c] += probe;
    minus[c] -= probe;
    const ChristoffelTable gp = christoffel(metric, plus);
    const ChristoffelTable gm = christoffel(metric, minus);
    ChristoffelTable diff(d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int e = 0; e < d; ++e) diff(a, b, e) = (gp(a, b, e) - gm(a, b, e)) / (2.0 * probe);
    dgamma.push_back(diff);
  }

  // R^a_bce = d_c Gamma^a_eb - d_e Gamma^a_cb + Gamma^a_cl Gamma^l_eb - Gamma^a_el Gamma^l_cb
  RiemannTensor mixed(d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) {
          double r = dgamma[c](a, e, b) - dgamma[e](a, c, b);
          for (int l = 0; l < d; ++l) r += gamma(a, c, l) * gamma(l, e, b) - gamma(a, e, l) * gamma(l, c, b);
          mixed(a, b, c, e) = r;
        }
  const SpacetimeMatrix g = metric.lorentz_metric(point);
  RiemannTensor lowered(d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) {
          double r = 0.0;
          for (int l = 0; l < d; ++l) r += g(a, l) * mixed(l, b, c, e);
          lowered(a, b, c, e) = r;
        }
  return lowered;
}

}  // namespace scflow

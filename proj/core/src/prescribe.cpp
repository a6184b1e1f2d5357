#include "scflow/prescribe.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "scflow/errors.hpp"

namespace scflow {

std::optional<SpacetimeVector> PrescribedCurvature::d_point(const SpacetimeVector&,
                                                            const SpacetimeVector&) const {
  return std::nullopt;
}

std::optional<SpacetimeVector> PrescribedCurvature::d_normal(const SpacetimeVector&,
                                                             const SpacetimeVector&) const {
  return std::nullopt;
}

namespace {

SpacetimeVector zeros_like(const SpacetimeVector& v) { return SpacetimeVector::Zero(v.size()); }

class ConstantRhs final : public PrescribedCurvature {
 public:
  explicit ConstantRhs(double level) : level_(level) {}
  std::string name() const override { return "constant"; }
  double value(const SpacetimeVector&, const SpacetimeVector&) const override { return level_; }
  bool depends_on_normal() const override { return false; }
  std::optional<SpacetimeVector> d_point(const SpacetimeVector& x,
                                         const SpacetimeVector&) const override {
    return zeros_like(x);
  }
  std::optional<SpacetimeVector> d_normal(const SpacetimeVector& x,
                                          const SpacetimeVector&) const override {
    return zeros_like(x);
  }

 private:
  double level_;
};

class TimeProfileRhs final : public PrescribedCurvature {
 public:
  TimeProfileRhs(double amplitude, double rate, double center)
      : amplitude_(amplitude), rate_(rate), center_(center) {}
  std::string name() const override { return "time-profile"; }
  double value(const SpacetimeVector& x, const SpacetimeVector&) const override {
    return amplitude_ * std::exp(-rate_ * (x[0] - center_));
  }
  bool depends_on_normal() const override { return false; }
  std::optional<SpacetimeVector> d_point(const SpacetimeVector& x,
                                         const SpacetimeVector& nu) const override {
    SpacetimeVector d = zeros_like(x);
    d[0] = -rate_ * value(x, nu);
    return d;
  }
  std::optional<SpacetimeVector> d_normal(const SpacetimeVector& x,
                                          const SpacetimeVector&) const override {
    return zeros_like(x);
  }

 private:
  double amplitude_, rate_, center_;
};

class NormalQuadraticRhs final : public PrescribedCurvature {
 public:
  NormalQuadraticRhs(double base, double epsilon, std::shared_ptr<const AmbientMetric> metric)
      : base_(base), epsilon_(epsilon), metric_(std::move(metric)) {}
  std::string name() const override { return "normal-quadratic"; }
  double value(const SpacetimeVector& x, const SpacetimeVector& nu) const override {
    const double q = std::exp(2.0 * metric_->sample(x).psi) * nu[0];
    return base_ + epsilon_ * q * q;
  }
  std::optional<SpacetimeVector> d_point(const SpacetimeVector& x,
                                         const SpacetimeVector& nu) const override {
    const MetricSample s = metric_->sample(x);
    const double q = std::exp(2.0 * s.psi) * nu[0];
    return SpacetimeVector(4.0 * epsilon_ * q * q * s.dpsi);
  }
  std::optional<SpacetimeVector> d_normal(const SpacetimeVector& x,
                                          const SpacetimeVector& nu) const override {
    const double w = std::exp(2.0 * metric_->sample(x).psi);
    SpacetimeVector d = zeros_like(x);
    d[0] = 2.0 * epsilon_ * w * w * nu[0];
    return d;
  }

 private:
  double base_, epsilon_;
  std::shared_ptr<const AmbientMetric> metric_;
};

class SpatialWaveRhs final : public PrescribedCurvature {
 public:
  SpatialWaveRhs(double base, double epsilon, double rate, double center, int axis)
      : base_(base), epsilon_(epsilon), rate_(rate), center_(center), axis_(axis) {}
  std::string name() const override { return "spatial-wave"; }
  double value(const SpacetimeVector& x, const SpacetimeVector&) const override {
    return base_ * (1.0 + epsilon_ * std::sin(x[axis_])) * decay(x);
  }
  bool depends_on_normal() const override { return false; }
  std::optional<SpacetimeVector> d_point(const SpacetimeVector& x,
                                         const SpacetimeVector& nu) const override {
    SpacetimeVector d = zeros_like(x);
    d[0] = -rate_ * value(x, nu);
    d[axis_] = base_ * epsilon_ * std::cos(x[axis_]) * decay(x);
    return d;
  }
  std::optional<SpacetimeVector> d_normal(const SpacetimeVector& x,
                                          const SpacetimeVector&) const override {
    return zeros_like(x);
  }

 private:
  double decay(const SpacetimeVector& x) const { return std::exp(-rate_ * (x[0] - center_)); }

  double base_, epsilon_, rate_, center_;
  int axis_;
};

class AffineTimeRhs final : public PrescribedCurvature {
 public:
  AffineTimeRhs(double intercept, double slope) : intercept_(intercept), slope_(slope) {}
  std::string name() const override { return "affine-time"; }
  double value(const SpacetimeVector& x, const SpacetimeVector&) const override {
    return intercept_ + slope_ * x[0];
  }
  bool depends_on_normal() const override { return false; }
  std::optional<SpacetimeVector> d_point(const SpacetimeVector& x,
                                         const SpacetimeVector&) const override {
    SpacetimeVector d = zeros_like(x);
    d[0] = slope_;
    return d;
  }
  std::optional<SpacetimeVector> d_normal(const SpacetimeVector& x,
                                          const SpacetimeVector&) const override {
    return zeros_like(x);
  }

 private:
  double intercept_, slope_;
};

void check_cutoff(const CutoffConfig& cfg) {
  if (!(cfg.k > 1.0) || !std::isfinite(cfg.k)) {
    throw ContractViolation("cutoff scale k must exceed 1, got " + std::to_string(cfg.k));
  }
}

}  // namespace

std::map<std::string, double> rhs_defaults(const std::string& family) {
  if (family == "constant") return {{"value", 1.0}};
  if (family == "time-profile") return {{"amplitude", 1.0}, {"rate", 1.0}, {"center", 0.0}};
  if (family == "normal-quadratic") return {{"base", 1.0}, {"epsilon", 0.1}};
  if (family == "spatial-wave") {
    return {{"base", 1.0}, {"epsilon", 0.1}, {"rate", 0.0}, {"center", 0.0}, {"axis", 1.0}};
  }
  if (family == "affine-time") return {{"intercept", 1.0}, {"slope", 0.0}};
  throw ConfigError("unknown rhs family '" + family + "'");
}

std::shared_ptr<const PrescribedCurvature> make_rhs(const RhsSpec& spec,
                                                    std::shared_ptr<const AmbientMetric> metric) {
  if (!metric) throw ContractViolation("make_rhs needs a metric");
  std::map<std::string, double> p = rhs_defaults(spec.family);
  for (const auto& [key, value] : spec.params) {
    if (!p.count(key)) {
      throw ConfigError("rhs family '" + spec.family + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw ConfigError("rhs parameter '" + key + "' is not finite");
    p[key] = value;
  }

  if (spec.family == "constant") return std::make_shared<ConstantRhs>(p["value"]);
  if (spec.family == "time-profile") {
    return std::make_shared<TimeProfileRhs>(p["amplitude"], p["rate"], p["center"]);
  }
  if (spec.family == "normal-quadratic") {
    return std::make_shared<NormalQuadraticRhs>(p["base"], p["epsilon"], std::move(metric));
  }
  if (spec.family == "spatial-wave") {
    const double axis = p["axis"];
    if (axis != std::floor(axis) || axis < 1 || axis > metric->dim()) {
      throw ConfigError("spatial-wave axis must be an integer in [1, n]");
    }
    return std::make_shared<SpatialWaveRhs>(p["base"], p["epsilon"], p["rate"], p["center"],
                                            static_cast<int>(axis));
  }
  return std::make_shared<AffineTimeRhs>(p["intercept"], p["slope"]);
}

double cutoff_theta(double t, const CutoffConfig& cfg) {
  check_cutoff(cfg);
  if (!(t >= 0.0)) throw ContractViolation("cutoff_theta needs t >= 0");
  const double k = cfg.k;
  if (t <= k) return t;
  if (t >= 2.0 * k) return 2.0 * k;
  const double tau = (t - k) / k;
  const double s = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
  return (1.0 - s) * t + s * 2.0 * k;
}

double cutoff_theta_slope(double t, const CutoffConfig& cfg) {
  check_cutoff(cfg);
  if (!(t >= 0.0)) throw ContractViolation("cutoff_theta_slope needs t >= 0");
  const double k = cfg.k;
  if (t <= k) return 1.0;
  if (t >= 2.0 * k) return 0.0;
  const double tau = (t - k) / k;
  const double s = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
  const double rest = 1.0 - tau;
  return 1.0 - s + 30.0 * tau * tau * rest * rest * rest;
}

SpacetimeVector modified_normal(const SpacetimeVector& normal, double vtilde,
                                const CutoffConfig& cfg) {
  check_cutoff(cfg);
  if (!(vtilde >= 1.0 - 1e-12) || !std::isfinite(vtilde)) {
    throw ContractViolation("modified_normal needs vtilde >= 1, got " + std::to_string(vtilde));
  }
  if (vtilde <= cfg.k) return normal;
  return SpacetimeVector(cutoff_theta(vtilde, cfg) / vtilde * normal);
}

std::string to_string(TargetMode mode) {
  return mode == TargetMode::AsGiven ? "as-given" : "square-root";
}

EffectiveRhs::EffectiveRhs(std::shared_ptr<const PrescribedCurvature> raw, CutoffConfig cutoff,
                           std::shared_ptr<const AmbientMetric> metric, TargetMode mode)
    : raw_(std::move(raw)), cutoff_(cutoff), metric_(std::move(metric)), mode_(mode) {
  if (!raw_ || !metric_) throw ContractViolation("effective_rhs needs f and a metric");
  check_cutoff(cutoff_);
}

std::string EffectiveRhs::name() const { return "effective(" + raw_->name() + ")"; }

double EffectiveRhs::finish(double f) const {
  if (mode_ == TargetMode::AsGiven) return f;
  if (!(f > 0.0)) throw PositivityViolation("square-root target of nonpositive f");
  return std::sqrt(f);
}

double EffectiveRhs::value(const SpacetimeVector& point, const SpacetimeVector& normal) const {
  if (!raw_->depends_on_normal()) return finish(raw_->value(point, normal));
  const double vtilde = -std::exp(metric_->sample(point).psi) * normal[0];
  return value(point, normal, vtilde);
}

double EffectiveRhs::value(const SpacetimeVector& point, const SpacetimeVector& normal,
                           double vtilde) const {
  if (!raw_->depends_on_normal() || vtilde <= cutoff_.k) {
    return finish(raw_->value(point, normal));
  }
  return finish(raw_->value(point, modified_normal(normal, vtilde, cutoff_)));
}

std::shared_ptr<const EffectiveRhs> effective_rhs(std::shared_ptr<const PrescribedCurvature> f,
                                                  const CutoffConfig& cfg,
                                                  std::shared_ptr<const AmbientMetric> metric,
                                                  TargetMode mode) {
  return std::make_shared<EffectiveRhs>(std::move(f), cfg, std::move(metric), mode);
}

std::vector<const AuditConstant*> GrowthAudit::constants() const {
  return {&c1, &c2, &c3, &c2_linear, &c3_bounded, &cutoff_c2_linear, &cutoff_c3_bounded};
}

namespace {

using Field = std::function<double(const SpacetimeVector&, const SpacetimeVector&)>;

/// Central-difference gradient of `fn` in its first (wrt_point) or second argument.
SpacetimeVector fd_gradient(const Field& fn, const SpacetimeVector& x, const SpacetimeVector& nu,
                            bool wrt_point, double rel_step) {
  const SpacetimeVector& base = wrt_point ? x : nu;
  SpacetimeVector grad(base.size());
  for (int b = 0; b < base.size(); ++b) {
    const double h = rel_step * std::max(1.0, std::abs(base[b]));
    SpacetimeVector plus = base, minus = base;
    plus[b] += h;
    minus[b] -= h;
    const double fp = wrt_point ? fn(plus, nu) : fn(x, plus);
    const double fm = wrt_point ? fn(minus, nu) : fn(x, minus);
    grad[b] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// Running maximum split into low-tilt and high-tilt probes.
struct SplitMax {
  AuditConstant all;
  double low = 0.0;
  double high = 0.0;
  bool saw_high = false;

  explicit SplitMax(std::string name) { all.name = std::move(name); }

  void add(double value, bool is_high, const SpacetimeVector& x, double tilt) {
    ++all.samples;
    if (all.samples == 1 || value > all.estimate) {
      all.estimate = value;
      all.witness_point = x;
      all.witness_tilt = tilt;
    }
    if (is_high) {
      high = std::max(high, value);
      saw_high = true;
    } else {
      low = std::max(low, value);
    }
  }

  bool plateaus() const { return saw_high && high <= low * (1.0 + 1e-6) + 1e-12; }
};

}  // namespace

GrowthAudit growth_audit(const PrescribedCurvature& f, std::shared_ptr<const AmbientMetric> metric,
                         const AuditSampleSpec& spec, const CutoffConfig& cutoff) {
  check_cutoff(cutoff);
  if (!metric) throw ContractViolation("growth_audit needs a metric");
  const int n = metric->dim();
  if (static_cast<int>(spec.periods.size()) != n) {
    throw ContractViolation("audit periods must have one entry per spatial axis");
  }
  if (spec.time_samples < 1 || spec.spatial_samples < 1 || spec.directions < 1 ||
      spec.tilts.empty() || !(spec.time_hi >= spec.time_lo)) {
    throw ContractViolation("degenerate audit sample settings");
  }
  for (double t : spec.tilts) {
    if (!(t >= 1.0)) throw ContractViolation("audit tilts must be >= 1");
  }

  const Field raw = [&f](const SpacetimeVector& x, const SpacetimeVector& nu) {
    return f.value(x, nu);
  };
  const Field wrapped = [&f, &metric, &cutoff](const SpacetimeVector& x,
                                               const SpacetimeVector& nu) {
    if (!f.depends_on_normal()) return f.value(x, nu);
    const double vtilde = -std::exp(metric->sample(x).psi) * nu[0];
    if (vtilde <= cutoff.k) return f.value(x, nu);
    return f.value(x, SpacetimeVector(cutoff_theta(vtilde, cutoff) / vtilde * nu));
  };

  GrowthAudit audit;
  audit.c1.name = "c1";
  audit.c1.estimate = std::numeric_limits<double>::infinity();
  SplitMax c2("c2"), c3("c3"), c2_linear("c2_linear"), c3_bounded("c3_bounded");
  SplitMax cut_c2("cutoff_c2_linear"), cut_c3("cutoff_c3_bounded");
  const double high_tilt = 8.0 * cutoff.k;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<SpatialVector> spatial(spec.spatial_samples, SpatialVector(n));
  for (auto& s : spatial)
    for (int a = 0; a < n; ++a) s[a] = unit(rng) * spec.periods[a];

  bool closed_form = true;
  for (int it = 0; it < spec.time_samples; ++it) {
    const double x0 = spec.time_samples == 1
                          ? spec.time_lo
                          : spec.time_lo + (spec.time_hi - spec.time_lo) * it / (spec.time_samples - 1);
    for (const SpatialVector& y : spatial) {
      SpacetimeVector x(n + 1);
      x[0] = x0;
      x.tail(n) = y;
      const MetricSample s = metric->sample(x);
      const Eigen::LLT<SpatialMatrix> chol(s.sigma);
      if (chol.info() != Eigen::Success) throw DegenerateMetricError("sigma not positive definite");

      for (double tilt : spec.tilts) {
        const bool is_high = tilt > high_tilt;
        for (int d = 0; d < spec.directions; ++d) {
          SpatialVector dir(n);
          for (int a = 0; a < n; ++a) dir[a] = gauss(rng);
          if (dir.norm() == 0.0) dir[0] = 1.0;
          dir /= dir.norm();
          // sigma(w, w) = tilt^2 - 1
          const SpatialVector w =
              std::sqrt(tilt * tilt - 1.0) * chol.matrixU().solve(dir);
          SpacetimeVector nu(n + 1);
          nu[0] = tilt;
          nu.tail(n) = w;
          nu *= -std::exp(-s.psi);
          const double nu_norm = reference_norm(s, nu);

          const double value = f.value(x, nu);
          if (!(value > 0.0)) {
            throw PositivityViolation(fmt::format(
                "f = {:.6g} <= 0 at x0 = {:.6g}, vtilde = {:.6g}", value, x0, tilt));
          }
          ++audit.c1.samples;
          if (value < audit.c1.estimate) {
            audit.c1.estimate = value;
            audit.c1.witness_point = x;
            audit.c1.witness_tilt = tilt;
          }

          std::optional<SpacetimeVector> fb = f.d_point(x, nu);
          std::optional<SpacetimeVector> fn = f.d_normal(x, nu);
          if (!fb || !fn) {
            closed_form = false;
            fb = fd_gradient(raw, x, nu, true, spec.fd_step);
            fn = fd_gradient(raw, x, nu, false, spec.fd_step);
          }
          const double fb_norm = reference_conorm(s, *fb);
          const double fn_norm = reference_conorm(s, *fn);
          c2.add(fb_norm / (1.0 + nu_norm * nu_norm), is_high, x, tilt);
          c3.add(fn_norm / (1.0 + nu_norm), is_high, x, tilt);
          c2_linear.add(fb_norm / (1.0 + nu_norm), is_high, x, tilt);
          c3_bounded.add(fn_norm, is_high, x, tilt);

          if (f.depends_on_normal()) {
            const SpacetimeVector cb = fd_gradient(wrapped, x, nu, true, spec.fd_step);
            const SpacetimeVector cn = fd_gradient(wrapped, x, nu, false, spec.fd_step);
            cut_c2.add(reference_conorm(s, cb) / (1.0 + nu_norm), is_high, x, tilt);
            cut_c3.add(reference_conorm(s, cn), is_high, x, tilt);
          } else {
            cut_c2.add(fb_norm / (1.0 + nu_norm), is_high, x, tilt);
            cut_c3.add(fn_norm, is_high, x, tilt);
          }
        }
      }
    }
  }

  audit.closed_form_partials = closed_form;
  audit.c2 = c2.all;
  audit.c3 = c3.all;
  audit.c2_linear = c2_linear.all;
  audit.c3_bounded = c3_bounded.all;
  audit.cutoff_c2_linear = cut_c2.all;
  audit.cutoff_c3_bounded = cut_c3.all;
  audit.strong_bounds_raw = c2_linear.plateaus() && c3_bounded.plateaus();
  audit.strong_bounds_cutoff = cut_c2.plateaus() && cut_c3.plateaus();
  return audit;
}

void write_audit_csv(std::ostream& out, const GrowthAudit& audit) {
  const int d = static_cast<int>(audit.c1.witness_point.size());
  out << "constant,estimate,samples";
  for (int a = 0; a < d; ++a) out << ",witness_x" << a;
  out << ",witness_tilt\n";
  for (const AuditConstant* c : audit.constants()) {
    out << c->name << fmt::format(",{:.17g},{}", c->estimate, c->samples);
    for (int a = 0; a < d; ++a) {
      out << fmt::format(",{:.17g}", a < c->witness_point.size() ? c->witness_point[a] : 0.0);
    }
    out << fmt::format(",{:.17g}\n", c->witness_tilt);
  }
}

}  // namespace scflow

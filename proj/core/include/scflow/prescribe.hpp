#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scflow/ambient.hpp"

namespace scflow {

/// Right-hand side f(x, nu) of the prescribed curvature equation. Inputs are a
/// spacetime point and a past-directed timelike vector.
class PrescribedCurvature {
 public:
  virtual ~PrescribedCurvature() = default;

  virtual std::string name() const = 0;
  virtual double value(const SpacetimeVector& point, const SpacetimeVector& normal) const = 0;

  /// False when f ignores its vector argument.
  virtual bool depends_on_normal() const { return true; }

  /// Closed-form f_beta = df/dx^beta, when available.
  virtual std::optional<SpacetimeVector> d_point(const SpacetimeVector& point,
                                                 const SpacetimeVector& normal) const;
  /// Closed-form f_{nu^beta} = df/dnu^beta, when available.
  virtual std::optional<SpacetimeVector> d_normal(const SpacetimeVector& point,
                                                  const SpacetimeVector& normal) const;
};

/// Named family with numeric parameters, as read from a run config.
///
///   constant          value                       f = value
///   time-profile      amplitude, rate, center     f = amplitude exp(-rate (x^0 - center))
///   normal-quadratic  base, epsilon               f = base + epsilon (e^{2 psi} nu^0)^2
///   spatial-wave      base, epsilon, rate,        f = base (1 + epsilon sin x^axis)
///                     center, axis                      * exp(-rate (x^0 - center))
///   affine-time       intercept, slope            f = intercept + slope x^0
struct RhsSpec {
  std::string family;
  std::map<std::string, double> params;
};

/// Throws ConfigError for unknown families or parameters.
std::shared_ptr<const PrescribedCurvature> make_rhs(const RhsSpec& spec,
                                                    std::shared_ptr<const AmbientMetric> metric);

/// Parameters a family accepts, with their defaults.
std::map<std::string, double> rhs_defaults(const std::string& family);

struct CutoffConfig {
  double k = 4.0;
};

/// theta(t) = t on [0, k], 2k on [2k, inf), quintic smoothstep blend between.
/// Throws ContractViolation for k <= 1 or t < 0.
double cutoff_theta(double t, const CutoffConfig& cfg);
double cutoff_theta_slope(double t, const CutoffConfig& cfg);

/// theta(vtilde) / vtilde * nu; identity when vtilde <= k.
SpacetimeVector modified_normal(const SpacetimeVector& normal, double vtilde,
                                const CutoffConfig& cfg);

/// Whether the flow targets sigma_2 = f or sigma_2 = f^{1/2}.
enum class TargetMode { AsGiven, SquareRoot };

std::string to_string(TargetMode mode);

/// x, nu -> f(x, theta(vtilde)/vtilde nu), optionally square-rooted, where
/// vtilde = -e^psi nu^0.
class EffectiveRhs final : public PrescribedCurvature {
 public:
  EffectiveRhs(std::shared_ptr<const PrescribedCurvature> raw, CutoffConfig cutoff,
               std::shared_ptr<const AmbientMetric> metric, TargetMode mode);

  std::string name() const override;
  double value(const SpacetimeVector& point, const SpacetimeVector& normal) const override;
  bool depends_on_normal() const override { return raw_->depends_on_normal(); }

  /// Same as value() with vtilde already known; skips the metric lookup.
  double value(const SpacetimeVector& point, const SpacetimeVector& normal, double vtilde) const;

  const PrescribedCurvature& raw() const { return *raw_; }
  const CutoffConfig& cutoff() const { return cutoff_; }
  TargetMode mode() const { return mode_; }

 private:
  double finish(double f) const;

  std::shared_ptr<const PrescribedCurvature> raw_;
  CutoffConfig cutoff_;
  std::shared_ptr<const AmbientMetric> metric_;
  TargetMode mode_;
};

std::shared_ptr<const EffectiveRhs> effective_rhs(std::shared_ptr<const PrescribedCurvature> f,
                                                  const CutoffConfig& cfg,
                                                  std::shared_ptr<const AmbientMetric> metric,
                                                  TargetMode mode = TargetMode::AsGiven);

/// Region and normals probed by the growth audit.
struct AuditSampleSpec {
  double time_lo = 0.0;
  double time_hi = 1.0;
  int time_samples = 9;
  /// Spatial points drawn uniformly from [0, period)^n.
  int spatial_samples = 16;
  std::vector<double> periods;
  /// vtilde values of the probed unit normals.
  std::vector<double> tilts = {1.0, 1.5, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0, 1024.0};
  int directions = 4;
  /// Relative step of the finite-difference partials.
  double fd_step = 1e-6;
  std::uint64_t seed = 1;
};

/// One estimated constant and the sample that produced it.
struct AuditConstant {
  std::string name;
  double estimate = 0.0;
  std::size_t samples = 0;
  SpacetimeVector witness_point;
  double witness_tilt = 1.0;
};

struct GrowthAudit {
  bool closed_form_partials = false;
  /// c1 = min f
  AuditConstant c1;
  /// c2 = max |f_beta| / (1 + |nu|^2)
  AuditConstant c2;
  /// c3 = max |f_nu| / (1 + |nu|)
  AuditConstant c3;
  /// max |f_beta| / (1 + |nu|), the linear-growth bound
  AuditConstant c2_linear;
  /// max |f_nu|, the bounded-derivative bound
  AuditConstant c3_bounded;
  /// Whether the linear-growth and bounded-derivative constants stop growing
  /// with vtilde, without and with the cutoff.
  bool strong_bounds_raw = false;
  bool strong_bounds_cutoff = false;
  /// Constants of f(x, theta(vtilde)/vtilde nu).
  AuditConstant cutoff_c2_linear;
  AuditConstant cutoff_c3_bounded;

  std::vector<const AuditConstant*> constants() const;
};

/// Estimates the growth constants by sampling. Throws PositivityViolation at
/// the first sample with f <= 0.
GrowthAudit growth_audit(const PrescribedCurvature& f, std::shared_ptr<const AmbientMetric> metric,
                         const AuditSampleSpec& spec, const CutoffConfig& cutoff);

/// Columns: constant, estimate, samples, witness_x0..witness_xn, witness_tilt.
void write_audit_csv(std::ostream& out, const GrowthAudit& audit);

}  // namespace scflow

#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace scflow {

/// Largest supported spatial dimension n of the Cauchy torus.
inline constexpr int kMaxDim = 4;
inline constexpr int kMaxSpacetimeDim = kMaxDim + 1;

// Dynamic-size, fixed-capacity types: no heap traffic in per-node kernels.
using SpatialMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using SpatialVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using SpacetimeMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                                      kMaxSpacetimeDim, kMaxSpacetimeDim>;
/// Components (x^0, x^1, ..., x^n); index 0 is the time coordinate.
using SpacetimeVector =
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxSpacetimeDim, 1>;

class AmbientMetric;

/// Pointwise data of ds^2 = e^{2 psi} (-(dx^0)^2 + sigma_ij dx^i dx^j).
struct MetricSample {
  double psi = 0.0;
  SpacetimeVector dpsi;  ///< d_alpha psi
  SpatialMatrix sigma;
  /// dsigma[alpha] = d_alpha sigma_ij, alpha = 0..n
  std::array<SpatialMatrix, kMaxSpacetimeDim> dsigma;
  /// Metric that last filled this sample; entries it never writes stay zero.
  const AmbientMetric* source = nullptr;

  /// Resets to psi = 0, sigma = delta, zero partials.
  void resize(int n);
};

/// Ambient Riemann tensor with all indices lowered, R_{abcd}, a..d in 0..n.
class RiemannTensor {
 public:
  explicit RiemannTensor(int spacetime_dim);

  int spacetime_dim() const { return dim_; }
  double& operator()(int a, int b, int c, int d) {
    return data_[((a * dim_ + b) * dim_ + c) * dim_ + d];
  }
  double operator()(int a, int b, int c, int d) const {
    return data_[((a * dim_ + b) * dim_ + c) * dim_ + d];
  }

 private:
  int dim_;
  std::vector<double> data_;
};

/// Warped-product Lorentzian metric. Providers give psi, sigma and their
/// first partials in closed form; immutable once built.
class AmbientMetric {
 public:
  virtual ~AmbientMetric() = default;

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }

  /// Fills psi, sigma and first partials at `point` (size n+1). `out` is
  /// reset only when it was last filled by a different metric.
  void sample(const SpacetimeVector& point, MetricSample& out) const;

  /// Closed-form ambient curvature, when the preset knows it.
  virtual bool has_curvature_oracle() const { return false; }
  virtual std::optional<RiemannTensor> riemann(const SpacetimeVector& point) const;

  MetricSample sample(const SpacetimeVector& point) const;

  /// Full Lorentzian metric e^{2 psi} diag(-1, sigma).
  SpacetimeMatrix lorentz_metric(const SpacetimeVector& point) const;

 protected:
  AmbientMetric(int dim, std::string name);

  /// Writes the entries this metric can make nonzero, all of them on every
  /// call; `out` starts from psi = 0, sigma = delta, zero partials.
  virtual void evaluate(const SpacetimeVector& point, MetricSample& out) const = 0;

 private:
  int dim_;
  std::string name_;
};

/// Named metric family with numeric parameters, as read from a run config.
struct MetricPreset {
  std::string name;    ///< flat-static | exp-warp | custom
  std::string family;  ///< custom only: conformal-linear | anisotropic-warp | lapse-wave | shear-wave
  std::map<std::string, double> params;
};

std::shared_ptr<const AmbientMetric> make_metric(const MetricPreset& preset, int dim);

std::shared_ptr<const AmbientMetric> flat_static_metric(int dim);
/// psi = 0, sigma = e^{-2 rate x^0} delta (rate = 1 is the standard preset).
std::shared_ptr<const AmbientMetric> exp_warp_metric(int dim, double rate = 1.0);

/// Gamma^alpha_{beta gamma}, alpha, beta, gamma in 0..n.
class ChristoffelTable {
 public:
  explicit ChristoffelTable(int spacetime_dim);

  int spacetime_dim() const { return dim_; }
  double& operator()(int a, int b, int c) { return data_[(a * dim_ + b) * dim_ + c]; }
  double operator()(int a, int b, int c) const {
    return data_[(a * dim_ + b) * dim_ + c];
  }

 private:
  int dim_;
  std::array<double, kMaxSpacetimeDim * kMaxSpacetimeDim * kMaxSpacetimeDim> data_{};
};

/// Levi-Civita symbols of the ambient metric from the supplied partials.
/// Throws DegenerateMetricError when sigma is not positive definite.
ChristoffelTable christoffel(const AmbientMetric& metric, const SpacetimeVector& point);
ChristoffelTable christoffel(const MetricSample& sample);

/// The Gamma^0 components that enter the graph second fundamental form.
struct TimeChristoffels {
  double g000 = 0.0;  ///< Gamma^0_00 = d_0 psi
  SpatialVector g00i;  ///< Gamma^0_0i = d_i psi
  SpatialMatrix g0ij;  ///< Gamma^0_ij = d_0 psi sigma_ij + sigma_ij,0 / 2
};
TimeChristoffels time_christoffels(const MetricSample& sample);

/// Second fundamental form of the slice {x^0 = const} through `point`:
/// e^{-psi} hbar_ij = -sigma_ij,0 / 2 - psi_,0 sigma_ij.
SpatialMatrix slice_second_fundamental_form(const AmbientMetric& metric,
                                            const SpacetimeVector& point);

/// Eigenvalues of hbar with respect to the slice metric e^{2 psi} sigma.
SpatialVector slice_principal_curvatures(const AmbientMetric& metric,
                                         const SpacetimeVector& point);

/// Norm in the Riemannian reference metric e^{2 psi} ((dx^0)^2 + sigma_ij dx^i dx^j).
double reference_norm(const AmbientMetric& metric, const SpacetimeVector& point,
                      const SpacetimeVector& vector);
double reference_norm(const MetricSample& sample, const SpacetimeVector& vector);

/// Reference norm of a covector (uses the inverse reference metric).
double reference_conorm(const MetricSample& sample, const SpacetimeVector& covector);

/// gbar(a, b).
double lorentz_inner(const MetricSample& sample, const SpacetimeVector& a,
                     const SpacetimeVector& b);

/// Largest deviation between supplied partials and centred differences of
/// the supplied fields, for probe spacing `probe`.
struct PartialsConsistency {
  double psi_error = 0.0;
  double sigma_error = 0.0;
  double max_error() const { return psi_error > sigma_error ? psi_error : sigma_error; }
};
PartialsConsistency check_partials(const AmbientMetric& metric,
                                   const SpacetimeVector& point, double probe);

/// Metric compatibility residual d_c g_ab - Gamma^d_ca g_db - Gamma^d_cb g_ad,
/// with d_c g_ab from centred differences of spacing `probe`.
double metric_compatibility_residual(const AmbientMetric& metric,
                                     const SpacetimeVector& point, double probe);

/// Riemann tensor assembled from centred differences of the analytic
/// Christoffel symbols. Test and verification use only.
RiemannTensor finite_difference_riemann(const AmbientMetric& metric,
                                        const SpacetimeVector& point, double probe);

}  // namespace scflow

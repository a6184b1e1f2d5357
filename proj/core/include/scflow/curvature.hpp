#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace scflow {

/// Curvature functions of principal-curvature vectors. Every symmetric
/// function sorts its input first, so results are bitwise invariant under
/// permutations of kappa.

enum class CurvatureFunction { H2, Sigma2 };

std::string to_string(CurvatureFunction which);

/// Elementary symmetric polynomial of order k, 1 <= k <= n. Computed from the
/// coefficients of prod_i (1 + kappa_i t); throws ContractViolation for k out of range.
double h_k(std::span<const double> kappa, int k);

/// H_1, ..., H_m in one pass, m = out.size() <= n.
void h_sequence(std::span<const double> kappa, std::span<double> out);

/// H_k^{1/k}; throws ConeViolation unless kappa lies in Gamma_k.
double sigma_k(std::span<const double> kappa, int k);

/// H_1 > 0, ..., H_k > 0, strictly.
bool gamma_k_member(std::span<const double> kappa, int k);

/// dH_2/dkappa_i = H - kappa_i.
std::vector<double> grad_h2(std::span<const double> kappa);

/// dsigma_2/dkappa_i = (H - kappa_i) / (2 sqrt(H_2)); throws ConeViolation outside Gamma_2.
std::vector<double> grad_sigma2(std::span<const double> kappa);

struct CurvatureEval {
  double value = 0.0;
  std::vector<double> gradient;
  CurvatureFunction which = CurvatureFunction::Sigma2;
};
CurvatureEval evaluate(std::span<const double> kappa, CurvatureFunction which);

/// One line of the inequality battery.
struct BatteryItem {
  char id = '?';
  std::string description;
  bool applicable = true;
  bool passed = true;
  /// Smallest slack over the item's sub-inequalities; negative on failure.
  double margin = 0.0;
};

/// (a) H^2/n <= |A|^2            (b) |A|^2 <= H^2 and H_2 <= H^2/2
/// (c) H > kappa_i               (d) H F_i >= F, F = H_2, and its equivalent
///     form H kappa_i <= (H^2 + |A|^2) / 2
/// (e) sum F_i kappa_i^2 >= (1/n) sum F_i kappa_{i0}^2 for i0 the smallest or
///     any negative component, F_i = H - kappa_i
/// (f) sum_i dsigma_2/dkappa_i >= sigma_2(1, ..., 1)
/// (g) kappa in Gamma_k implies kappa in Gamma_{k-1}, k = 2..n
/// Items (a)-(f) apply only for kappa in Gamma_2; (g) applies to any kappa.
struct BatteryReport {
  std::array<BatteryItem, 7> items;
  bool all_passed() const;
};
BatteryReport inequality_battery(std::span<const double> kappa);

/// sigma_2(t a + (1 - t) b) >= t sigma_2(a) + (1 - t) sigma_2(b) - 1e-12.
/// Throws ConeViolation when a or b is outside Gamma_2.
bool concavity_probe(std::span<const double> a, std::span<const double> b, double t);

/// F^{ij,kl} eta_ij eta_kl in eigenvalue coordinates: second partials on the
/// diagonal of eta plus divided differences (F_i - F_j)/(kappa_i - kappa_j)
/// on the off-diagonal, replaced by F_ii - F_ij when |kappa_i - kappa_j| < 1e-9.
double hessian_quadratic_form(std::span<const double> kappa, const Eigen::MatrixXd& eta,
                              CurvatureFunction which = CurvatureFunction::Sigma2);

/// Threshold below which the divided difference is replaced by its limit.
inline constexpr double kDividedDifferenceThreshold = 1e-9;

}  // namespace scflow

#include "scflow/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scflow/errors.hpp"

namespace scflow {

namespace {

/// Ascending copy of kappa; inline storage for the common small case.
class CanonicalOrder {
 public:
  explicit CanonicalOrder(std::span<const double> kappa) {
    if (kappa.size() <= inline_.size()) {
      std::copy(kappa.begin(), kappa.end(), inline_.begin());
      view_ = std::span<double>(inline_.data(), kappa.size());
    } else {
      heap_.assign(kappa.begin(), kappa.end());
      view_ = std::span<double>(heap_);
    }
    // Insertion sort: stable, allocation-free, and fast for the handful of
    // entries a principal-curvature vector has.
    for (std::size_t i = 1; i < view_.size(); ++i) {
      const double x = view_[i];
      std::size_t j = i;
      for (; j > 0 && x < view_[j - 1]; --j) view_[j] = view_[j - 1];
      view_[j] = x;
    }
  }

  std::span<const double> values() const { return view_; }

 private:
  std::array<double, 16> inline_;
  std::vector<double> heap_;
  std::span<double> view_;
};

/// Storage for H_0..H_k.
class Coefficients {
 public:
  explicit Coefficients(int k) : size_(static_cast<std::size_t>(k) + 1) {
    if (size_ > inline_.size()) heap_.resize(size_);
  }
  std::span<double> span() {
    return heap_.empty() ? std::span<double>(inline_.data(), size_) : std::span<double>(heap_);
  }

 private:
  std::size_t size_;
  std::array<double, 17> inline_;
  std::vector<double> heap_;
};

void require_nonempty(std::span<const double> kappa) {
  if (kappa.empty()) throw ContractViolation("empty principal-curvature vector");
}

/// e[j] = H_j(kappa) for j = 0..k.
void elementary_symmetric(std::span<const double> sorted, int k, std::span<double> e) {
  std::fill(e.begin(), e.end(), 0.0);
  e[0] = 1.0;
  int filled = 0;
  for (double x : sorted) {
    filled = std::min(filled + 1, k);
    for (int j = filled; j >= 1; --j) e[j] += x * e[j - 1];
  }
}

double sum_of(std::span<const double> kappa) {
  const CanonicalOrder c(kappa);
  double s = 0.0;
  for (double x : c.values()) s += x;
  return s;
}

double sum_of_squares(std::span<const double> kappa) {
  const CanonicalOrder c(kappa);
  double s = 0.0;
  for (double x : c.values()) s += x * x;
  return s;
}

}  // namespace

std::string to_string(CurvatureFunction which) {
  return which == CurvatureFunction::H2 ? "H2" : "sigma2";
}

double h_k(std::span<const double> kappa, int k) {
  require_nonempty(kappa);
  const int n = static_cast<int>(kappa.size());
  if (k < 1 || k > n) {
    throw ContractViolation("h_k order " + std::to_string(k) + " outside [1, " +
                            std::to_string(n) + "]");
  }
  const CanonicalOrder c(kappa);
  Coefficients e(k);
  elementary_symmetric(c.values(), k, e.span());
  return e.span()[k];
}

void h_sequence(std::span<const double> kappa, std::span<double> out) {
  require_nonempty(kappa);
  const int k = static_cast<int>(out.size());
  if (k < 1 || k > static_cast<int>(kappa.size())) {
    throw ContractViolation("h_sequence length outside [1, n]");
  }
  if (kappa.size() == 2) {
    // Sum and product of two values do not depend on their order.
    out[0] = kappa[0] + kappa[1];
    if (k == 2) out[1] = kappa[0] * kappa[1];
    return;
  }
  const CanonicalOrder c(kappa);
  Coefficients e(k);
  elementary_symmetric(c.values(), k, e.span());
  std::copy(e.span().begin() + 1, e.span().end(), out.begin());
}

bool gamma_k_member(std::span<const double> kappa, int k) {
  require_nonempty(kappa);
  const int n = static_cast<int>(kappa.size());
  if (k < 1 || k > n) throw ContractViolation("cone order out of range");
  const CanonicalOrder c(kappa);
  Coefficients e(k);
  elementary_symmetric(c.values(), k, e.span());
  for (int j = 1; j <= k; ++j) {
    if (!(e.span()[j] > 0.0)) return false;
  }
  return true;
}

double sigma_k(std::span<const double> kappa, int k) {
  if (!gamma_k_member(kappa, k)) {
    throw ConeViolation("kappa is outside Gamma_" + std::to_string(k));
  }
  const double hk = h_k(kappa, k);
  return k == 1 ? hk : (k == 2 ? std::sqrt(hk) : std::pow(hk, 1.0 / k));
}

std::vector<double> grad_h2(std::span<const double> kappa) {
  require_nonempty(kappa);
  const double H = sum_of(kappa);
  std::vector<double> grad(kappa.size());
  for (std::size_t i = 0; i < kappa.size(); ++i) grad[i] = H - kappa[i];
  return grad;
}

std::vector<double> grad_sigma2(std::span<const double> kappa) {
  if (kappa.size() < 2 || !gamma_k_member(kappa, 2)) {
    throw ConeViolation("grad_sigma2 requires kappa in Gamma_2");
  }
  const double scale = 0.5 / std::sqrt(h_k(kappa, 2));
  std::vector<double> grad = grad_h2(kappa);
  for (double& g : grad) g *= scale;
  return grad;
}

CurvatureEval evaluate(std::span<const double> kappa, CurvatureFunction which) {
  CurvatureEval out;
  out.which = which;
  if (which == CurvatureFunction::H2) {
    out.value = h_k(kappa, 2);
    out.gradient = grad_h2(kappa);
  } else {
    out.value = sigma_k(kappa, 2);
    out.gradient = grad_sigma2(kappa);
  }
  return out;
}

bool BatteryReport::all_passed() const {
  return std::all_of(items.begin(), items.end(),
                     [](const BatteryItem& it) { return !it.applicable || it.passed; });
}

BatteryReport inequality_battery(std::span<const double> kappa) {
  require_nonempty(kappa);
  const int n = static_cast<int>(kappa.size());
  BatteryReport report;
  auto& items = report.items;
  items[0] = {'a', "H^2/n <= |A|^2"};
  items[1] = {'b', "|A|^2 <= H^2 and H_2 <= H^2/2"};
  items[2] = {'c', "H > kappa_i"};
  items[3] = {'d', "H F_i >= F (F = H_2), equivalently H kappa_i <= (H^2 + |A|^2)/2"};
  items[4] = {'e', "sum F_i kappa_i^2 >= (1/n) sum F_i kappa_i0^2"};
  items[5] = {'f', "sum dsigma_2/dkappa_i >= sigma_2(1,...,1)"};
  items[6] = {'g', "Gamma_k subset Gamma_(k-1)"};

  // (g) holds for arbitrary kappa.
  {
    BatteryItem& g = items[6];
    g.margin = 1.0;
    for (int k = 2; k <= n; ++k) {
      if (gamma_k_member(kappa, k) && !gamma_k_member(kappa, k - 1)) {
        g.passed = false;
        g.margin = -1.0;
      }
    }
  }

  const bool in_gamma2 = n >= 2 && gamma_k_member(kappa, 2);
  for (int i = 0; i < 6; ++i) items[i].applicable = in_gamma2;
  if (!in_gamma2) return report;

  const double H = sum_of(kappa);
  const double A2 = sum_of_squares(kappa);
  const double H2 = h_k(kappa, 2);
  const double scale = 1.0 + H * H + A2;
  const double tol = 1e-12 * scale;
  auto settle = [&](BatteryItem& item, double margin) {
    item.margin = margin;
    item.passed = margin >= -tol;
  };

  settle(items[0], A2 - H * H / n);
  settle(items[1], std::min(H * H - A2, 0.5 * H * H - H2));

  double c_margin = std::numeric_limits<double>::infinity();
  double d_margin = std::numeric_limits<double>::infinity();
  for (double k : kappa) {
    c_margin = std::min(c_margin, H - k);
    d_margin = std::min({d_margin, H * (H - k) - H2, 0.5 * H * H + 0.5 * A2 - H * k});
  }
  // (c) is strict: zero slack is a failure.
  items[2].margin = c_margin;
  items[2].passed = c_margin > 0.0;
  settle(items[3], d_margin);

  {
    const CanonicalOrder c(kappa);
    double weighted = 0.0, weights = 0.0;
    for (double k : c.values()) {
      weighted += (H - k) * k * k;
      weights += H - k;
    }
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i0 = 0; i0 < c.values().size(); ++i0) {
      const double k0 = c.values()[i0];
      if (i0 != 0 && !(k0 < 0.0)) continue;
      margin = std::min(margin, weighted - weights * k0 * k0 / n);
    }
    settle(items[4], margin);
  }

  {
    const double trace = (n - 1) * H * 0.5 / std::sqrt(H2);
    const double umbilic = std::sqrt(0.5 * n * (n - 1));
    items[5].margin = trace - umbilic;
    items[5].passed = items[5].margin >= -1e-12 * std::max(1.0, umbilic);
  }
  return report;
}

bool concavity_probe(std::span<const double> a, std::span<const double> b, double t) {
  if (a.size() != b.size()) throw ContractViolation("concavity probe dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw ContractViolation("concavity probe weight outside [0, 1]");
  const double sa = sigma_k(a, 2);
  const double sb = sigma_k(b, 2);
  std::vector<double> mid(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) mid[i] = t * a[i] + (1.0 - t) * b[i];
  return sigma_k(mid, 2) >= t * sa + (1.0 - t) * sb - 1e-12;
}

double hessian_quadratic_form(std::span<const double> kappa, const Eigen::MatrixXd& eta,
                              CurvatureFunction which) {
  const int n = static_cast<int>(kappa.size());
  if (eta.rows() != n || eta.cols() != n) throw ContractViolation("eta must be n x n");
  if (n < 2) throw ContractViolation("hessian_quadratic_form requires n >= 2");

  const double H = sum_of(kappa);
  Eigen::MatrixXd second(n, n);
  std::vector<double> grad;
  if (which == CurvatureFunction::H2) {
    second = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
    grad = grad_h2(kappa);
  } else {
    grad = grad_sigma2(kappa);
    const double H2 = h_k(kappa, 2);
    const double root = std::sqrt(H2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        second(i, j) = -(H - kappa[i]) * (H - kappa[j]) / (4.0 * H2 * root) +
                       (i == j ? 0.0 : 0.5 / root);
      }
  }

  double diagonal = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) diagonal += second(i, j) * eta(i, i) * eta(j, j);

  double off = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double gap = kappa[i] - kappa[j];
      const double quotient = std::abs(gap) < kDividedDifferenceThreshold
                                  ? second(i, i) - second(i, j)
                                  : (grad[i] - grad[j]) / gap;
      off += quotient * eta(i, j) * eta(i, j);
    }
  return diagonal + off;
}

}  // namespace scflow

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace scflow::cli {

/// One checked property. `worst_margin` is the smallest slack seen (negative
/// on failure); `value` is the item's headline number (an error, a ratio or
/// a count).
struct VerifyRow {
  std::string suite;
  std::string item;
  std::size_t samples = 0;
  std::size_t failures = 0;
  double worst_margin = 0.0;
  double value = 0.0;
};

struct VerifyReport {
  std::vector<VerifyRow> rows;

  bool passed() const;
  /// Columns: suite, item, samples, failures, worst_margin, value.
  void write_csv(std::ostream& out) const;
};

/// Inequality battery, concavity, gradients, Hessian form and h_k
/// enumeration on seeded random principal-curvature vectors, n in {2, 3, 5}.
VerifyReport verify_curvature(std::uint64_t seed, std::size_t samples);

/// Umbilic slices, pointwise geometric identities and second-order
/// convergence of the Codazzi and Gauss residuals on 32^2 and 64^2 grids.
VerifyReport verify_geometry(std::uint64_t seed, std::size_t samples);

/// Branch values, junction continuity and slope bound of the cutoff.
VerifyReport verify_cutoff(std::uint64_t seed, std::size_t samples);

/// suite is curvature, geometry, cutoff or all; throws ConfigError otherwise.
VerifyReport verify_suite(const std::string& suite, std::uint64_t seed, std::size_t samples);

}  // namespace scflow::cli

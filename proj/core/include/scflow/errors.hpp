#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sigma_ij failed to be positive definite at a queried point.
class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

/// |Du|^2 reached the spacelike guard at some grid node.
class SpacelikeViolation : public Error {
 public:
  SpacelikeViolation(std::size_t node, double gradient_sq)
      : Error("spacelike violation at node " + std::to_string(node) +
              ": |Du|^2 = " + std::to_string(gradient_sq)),
        node_(node),
        gradient_sq_(gradient_sq) {}

  std::size_t node() const { return node_; }
  double gradient_sq() const { return gradient_sq_; }

 private:
  std::size_t node_;
  double gradient_sq_;
};

/// A principal-curvature vector left the cone a function is defined on.
class ConeViolation : public Error {
 public:
  using Error::Error;
};

/// The induced metric could not be factored (eigenproblem failure).
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// A residual check that needs data the metric does not carry.
class UnsupportedCheckError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A barrier surface failed admissibility or its curvature inequality.
class InvalidBarrierError : public ConfigError {
 public:
  InvalidBarrierError(const std::string& what, std::size_t node, double margin)
      : ConfigError(what), node_(node), margin_(margin) {}

  std::size_t node() const { return node_; }
  double margin() const { return margin_; }

 private:
  std::size_t node_;
  double margin_;
};

/// The prescribed function was not strictly positive at an audited sample.
class PositivityViolation : public Error {
 public:
  using Error::Error;
};

/// Step-size halving exhausted without producing an admissible state.
class FlowBreakdown : public Error {
 public:
  using Error::Error;
};

}  // namespace scflow

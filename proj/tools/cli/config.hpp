#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scflow/ambient.hpp"
#include "scflow/flow.hpp"
#include "scflow/grid.hpp"
#include "scflow/prescribe.hpp"

namespace scflow::cli {

/// How a barrier height field is produced on the grid.
///
///   constant  u = level
///   sine      u = level + amplitude sin(wavenumber x^axis), axis in 1..n
///   file      binary snapshot at `path` (relative to the config file)
struct BarrierSpec {
  std::string kind = "constant";
  double level = 0.0;
  double amplitude = 0.0;
  int axis = 1;
  double wavenumber = 1.0;
  std::string path;
};

struct FlowSettings {
  std::string scheme = "ssprk3";
  int stages = 10;
  double dt_safety = 0.2;
  double t_max = 50.0;
  double tol_converge = 1e-8;
  double tol_sign = 1e-10;
  int monitor_every = 1;
  int max_halvings = 20;
  double ceiling_factor = 10.0;
  double admissibility_margin = 1e-8;
  double spacelike_margin = 1e-6;
};

/// Sampling region of the growth audit; the time band defaults to
/// [min u_1, max u_2].
struct AuditSettings {
  std::optional<double> time_lo;
  std::optional<double> time_hi;
  int time_samples = 9;
  int spatial_samples = 16;
  std::vector<double> tilts = {1.0, 1.5, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0, 1024.0};
  int directions = 4;
  double fd_step = 1e-6;
};

struct RunConfig {
  MetricPreset metric;
  int dim = 2;
  std::vector<int> shape;
  std::vector<double> spacing;
  RhsSpec rhs;
  bool sqrt_mode = false;
  CutoffConfig cutoff;
  BarrierSpec lower;
  BarrierSpec upper;
  FlowSettings flow;
  AuditSettings audit;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  /// Directory the config was read from; resolves barrier file paths.
  std::filesystem::path base_dir;
};

/// Validates against the schema; unknown keys, missing required keys and
/// out-of-range values throw ConfigError.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Every field spelled out, defaults included; parse(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& config);
std::string canonical_form(const RunConfig& config);

/// Objects a run needs, built from a validated config.
struct RunSetup {
  std::shared_ptr<const AmbientMetric> metric;
  std::shared_ptr<const GridChart> chart;
  std::shared_ptr<const PrescribedCurvature> raw_rhs;
  std::shared_ptr<const EffectiveRhs> rhs;
  FlowConfig flow;
  AuditSampleSpec audit;
};

RunSetup build_setup(const RunConfig& config);

GraphFunction build_barrier(const BarrierSpec& spec, std::shared_ptr<const GridChart> chart,
                            const std::filesystem::path& base_dir);

}  // namespace scflow::cli

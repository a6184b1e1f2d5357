#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace scflow::cli {

/// Process exit statuses of the scflow tool.
enum ExitCode : int {
  kExitConverged = 0,
  kExitConfigError = 1,
  kExitTimeout = 2,
  kExitBreakdown = 3,
  kExitPositivity = 4,
  /// A run monitor tripped, or a verify suite reported a failure.
  kExitInvariant = 5,
};

/// Output directory: the override when given, else the config's output.dir.
using OutDir = std::optional<std::filesystem::path>;

/// initialize + run; writes config.json (canonical), trace.csv, final.snap,
/// final.csv, audit.csv and report.txt to the output directory.
int cmd_run(const std::filesystem::path& config_path, const OutDir& out_dir, std::ostream& out,
            std::ostream& err);

/// CSV report on `out`, and to verify_<suite>.csv when out_dir is given.
int cmd_verify(const std::string& suite, std::uint64_t seed, std::size_t samples,
               const OutDir& out_dir, std::ostream& out, std::ostream& err);

/// Growth-audit CSV on `out` and to audit.csv in the output directory.
int cmd_audit(const std::filesystem::path& config_path, const OutDir& out_dir, std::ostream& out,
              std::ostream& err);

}  // namespace scflow::cli

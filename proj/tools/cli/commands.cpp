#include "commands.hpp"

#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "config.hpp"
#include "scflow/errors.hpp"
#include "scflow/flow.hpp"
#include "scflow/snapshot.hpp"
#include "verify.hpp"

namespace scflow::cli {

namespace {

std::filesystem::path prepare_dir(const OutDir& override_dir, const RunConfig& config) {
  const std::filesystem::path dir =
      override_dir ? *override_dir : std::filesystem::path(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

int exit_for(Verdict verdict) {
  switch (verdict) {
    case Verdict::Converged: return kExitConverged;
    case Verdict::Timeout: return kExitTimeout;
    case Verdict::Breakdown: return kExitBreakdown;
    case Verdict::InvariantViolation: return kExitInvariant;
  }
  return kExitBreakdown;
}

/// Runs `body`, mapping library errors onto exit codes with a message on err.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const PositivityViolation& e) {
    err << "positivity violation: " << e.what() << '\n';
    return kExitPositivity;
  } catch (const InvalidBarrierError& e) {
    err << "invalid barrier: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const FlowBreakdown& e) {
    err << "flow breakdown: " << e.what() << '\n';
    return kExitBreakdown;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitBreakdown;
  }
}

}  // namespace

int cmd_run(const std::filesystem::path& config_path, const OutDir& out_dir, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = load_config(config_path);
    const RunSetup setup = build_setup(config);
    const std::filesystem::path dir = prepare_dir(out_dir, config);
    open_output(dir / "config.json") << canonical_form(config);

    const GrowthAudit audit = growth_audit(*setup.raw_rhs, setup.metric, setup.audit, config.cutoff);
    {
      std::ofstream csv = open_output(dir / "audit.csv");
      write_audit_csv(csv, audit);
    }

    const FlowResult result = run(setup.flow, *setup.metric, *setup.rhs);
    {
      std::ofstream csv = open_output(dir / "trace.csv");
      result.trace.write_csv(csv);
    }
    write_snapshot_binary(dir / "final.snap", result.state.u);
    write_snapshot_csv(dir / "final.csv", result.state.u, result.state.geometry);
    {
      std::ofstream report = open_output(dir / "report.txt");
      write_run_report(report, result, &audit);
    }

    out << fmt::format("verdict={} steps={} t={:.6g} wall={:.2f}s\n", to_string(result.verdict),
                       result.state.steps, result.state.t, result.wall_seconds);
    if (result.verdict != Verdict::Converged) err << result.message << '\n';
    return exit_for(result.verdict);
  });
}

int cmd_verify(const std::string& suite, std::uint64_t seed, std::size_t samples,
               const OutDir& out_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const VerifyReport report = verify_suite(suite, seed, samples);
    report.write_csv(out);
    if (out_dir) {
      std::error_code ec;
      std::filesystem::create_directories(*out_dir, ec);
      std::ofstream file = open_output(*out_dir / ("verify_" + suite + ".csv"));
      report.write_csv(file);
    }
    if (report.passed()) return static_cast<int>(kExitConverged);
    for (const VerifyRow& r : report.rows) {
      if (r.failures > 0) {
        err << fmt::format("{}/{}: {} of {} samples failed (worst margin {:.3g})\n", r.suite,
                           r.item, r.failures, r.samples, r.worst_margin);
      }
    }
    return static_cast<int>(kExitInvariant);
  });
}

int cmd_audit(const std::filesystem::path& config_path, const OutDir& out_dir, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = load_config(config_path);
    const RunSetup setup = build_setup(config);
    const GrowthAudit audit = growth_audit(*setup.raw_rhs, setup.metric, setup.audit, config.cutoff);
    write_audit_csv(out, audit);
    const std::filesystem::path dir = prepare_dir(out_dir, config);
    std::ofstream csv = open_output(dir / "audit.csv");
    write_audit_csv(csv, audit);
    return static_cast<int>(kExitConverged);
  });
}

}  // namespace scflow::cli

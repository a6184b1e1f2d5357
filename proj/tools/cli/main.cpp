#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "scflow/parallel.hpp"

int main(int argc, char** argv) {
  using namespace scflow::cli;

  CLI::App app{"Prescribed scalar curvature flow of spacelike graphs"};
  app.require_subcommand(1);

  int threads = 0;
  std::string out_dir;
  app.add_option("--threads", threads, "Worker thread cap (0 = default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", out_dir, "Output directory (overrides output.dir)");

  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "Flow from the upper barrier until convergence");
  run->add_option("config", run_config, "Run config (JSON)")->required();

  std::string suite;
  std::uint64_t seed = 1;
  std::size_t samples = 10000;
  CLI::App* verify = app.add_subcommand("verify", "Run property suites");
  verify->add_option("suite", suite, "curvature | geometry | cutoff | all")
      ->required()
      ->check(CLI::IsMember({"curvature", "geometry", "cutoff", "all"}));
  verify->add_option("--seed", seed, "Random seed");
  verify->add_option("--samples", samples, "Samples per suite");

  std::string audit_config;
  CLI::App* audit = app.add_subcommand("audit", "Estimate growth constants of f");
  audit->add_option("config", audit_config, "Run config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  scflow::set_thread_limit(threads);
  const OutDir dir = out_dir.empty() ? OutDir{} : OutDir{std::filesystem::path(out_dir)};

  if (*run) return cmd_run(run_config, dir, std::cout, std::cerr);
  if (*verify) return cmd_verify(suite, seed, samples, dir, std::cout, std::cerr);
  return cmd_audit(audit_config, dir, std::cout, std::cerr);
}

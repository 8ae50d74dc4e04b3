#include <CLI11.hpp>

#include <iostream>

#include "cli/catalog.hpp"
#include "cli/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Trapping experiments: annealed and quenched survival among moving traps"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  unsigned workers = 0;
  bool strict = false;
  std::string out_dir;
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--workers", workers, "worker threads (0: all cores)");
  run->add_flag("--strict", strict, "deterministic artifacts (wall times written as 0)");
  run->add_option("--out", out_dir, std::string("output directory (default: config, then $") + trapsim::kOutputEnv +
                                        ", then ./trapsim-out)");

  app.add_subcommand("list", "print the acceptance experiment catalog as JSON");
  app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : trapsim::kExitError;
  }

  if (app.got_subcommand("list")) {
    std::cout << trapsim::catalog_json().dump(2) << '\n';
    return trapsim::kExitOk;
  }
  if (app.got_subcommand("version")) {
    std::cout << "trapsim " << trapsim::version() << " (config schema " << trapsim::kSchemaVersion << ")\n";
    return trapsim::kExitOk;
  }
  trapsim::RunOptions options;
  options.workers = workers;
  options.strict = strict;
  if (!out_dir.empty()) options.out_dir = out_dir;
  return trapsim::run(config_path, options, std::cerr);
}

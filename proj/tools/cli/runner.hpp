#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli/config.hpp"
#include "trapping/asymptotics.hpp"
#include "trapping/estimate.hpp"
#include "trapping/stats.hpp"

namespace trapsim {

inline constexpr const char* kOutputEnv = "TRAPSIM_OUTPUT_DIR";

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitTolerance = 2 };

struct Check {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct RunReport {
  std::vector<trapping::SurvivalEstimate> estimates;
  nlohmann::json fits = nlohmann::json::array();
  std::vector<Check> checks;
  /// Extra CSV files by name.
  std::map<std::string, std::string> tables;
  double wall_time = 0.0;

  bool passed() const;
};

struct RunOptions {
  unsigned workers = 0;
  /// Deterministic artifacts: wall times are written as 0.
  bool strict = false;
  std::optional<std::string> out_dir;
};

/// Runs the experiment without touching the filesystem.
RunReport execute(const ExperimentConfig& config, const trapping::ExecutionOptions& exec);

/// --out, then the config's "output", then $TRAPSIM_OUTPUT_DIR, then ./trapsim-out.
std::filesystem::path output_directory(const ExperimentConfig& config, const RunOptions& options);

/// results.csv, fits.json, manifest.json and the report's extra tables.
void write_artifacts(const ExperimentConfig& config, const RunReport& report, const RunOptions& options,
                     const std::filesystem::path& dir);

/// Loads, runs and writes; returns the process exit code. Messages go to `log`.
int run(const std::string& config_path, const RunOptions& options, std::ostream& log);

std::string results_csv(const std::vector<trapping::SurvivalEstimate>& rows, bool strict);
nlohmann::json to_json(const trapping::RateFit& fit);
nlohmann::json to_json(const Check& check);

std::string version();

}  // namespace trapsim

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapping/asymptotics.hpp"
#include "trapping/estimate.hpp"
#include "trapping/pam.hpp"
#include "trapping/pathmeasure.hpp"

namespace trapsim {

inline constexpr int kSchemaVersion = 1;

enum class Kind { survival_grid, rate_fit, dv_check, gibbs_fluctuation, pam_crosscheck, pascal_suite, quenched_rate };

std::string to_string(Kind k);
Kind parse_kind(const std::string& name);
const std::vector<Kind>& all_kinds();

/// Raised for malformed configs; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  Kind kind = Kind::survival_grid;
  trapping::ModelParams model;
  /// Step sets of one-dimensional uniform kernels, empty for nearest neighbour.
  std::vector<int> walker_steps;
  std::vector<int> trap_steps;
  std::vector<double> ts;
  long n_outer = 1000;
  long n_inner = 100;
  std::uint64_t seed = 0;
  std::map<std::string, double> tolerances;
  std::optional<std::string> output;
  /// Free text echoed into the manifest.
  std::string label;

  std::vector<trapping::Estimator> estimators;
  std::optional<trapping::RateModel> fit_model;
  trapping::Estimator rate_estimator = trapping::Estimator::pascal_ref;
  double p = 0.5;
  bool importance = true;
  double alpha = 0.1;
  double epsilon = 0.0;
  trapping::GibbsProposal proposal = trapping::GibbsProposal::confined;
  trapping::IntegratorConfig integrator;
  std::vector<std::uint64_t> field_seeds;
  /// Walks per t for quenched-rate; 0 solves the PAM.
  long quenched_walks = 0;
  /// Start sites averaged per field for quenched-rate (odd).
  int start_sites = 1;
  /// pam-crosscheck and quenched-rate: also write field.json and u.csv.
  bool snapshots = false;

  /// Tolerance by name, falling back to the kind's default.
  double tolerance(const std::string& name) const;
};

/// Default tolerances of a kind; the only names accepted in "tolerances".
std::map<std::string, double> default_tolerances(Kind kind, int dim);

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON echo; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace trapsim

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace trapsim {

/// Built-in acceptance experiment. Every entry runs in full through the
/// acceptance binary; `configs` holds the parts that map onto CLI kinds.
struct CatalogEntry {
  std::string id;
  std::string title;
  /// Measured single-core runtime of the acceptance run, seconds.
  double expected_seconds = 0.0;
  nlohmann::json configs = nlohmann::json::array();
};

const std::vector<CatalogEntry>& experiment_catalog();

nlohmann::json catalog_json();

}  // namespace trapsim

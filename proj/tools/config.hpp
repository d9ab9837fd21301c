#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "bayesdes/scenarios.hpp"

namespace bayesdes::cli {

/// A malformed or invalid problem config; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigSchemaVersion = 1;

/// Builds a problem from a parsed config. Engine settings not given take the defaults.
/// BAYESDES_SEED, when set, replaces engine.seed.
Scenario load_problem(const nlohmann::json& config);
Scenario load_problem_file(const std::string& path);

}  // namespace bayesdes::cli

#ifndef ELICIT_VERIFY_HPP
#define ELICIT_VERIFY_HPP

#include "elicit/theory.hpp"

#include <json.hpp>

#include <filesystem>
#include <string_view>
#include <vector>

namespace elicit {

struct SuiteResult {
  std::string name;
  std::vector<CheckResult> checks;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Suite names accepted by run_suite.
const std::vector<std::string_view>& suite_names();

/// Closed-form Jacobians against central finite differences, 20 interior
/// points per model.
SuiteResult verify_jacobians();

/// Known property identities on exact moments, the lognormal skewness
/// closed form, the lognormal log map, and the monotone-moment premise.
SuiteResult verify_identities();

/// Runs every experiment config in `dir`: swept sub-loss monotonicity,
/// condition A on one-parameter models, and case prediction against the
/// observed best weight.
SuiteResult verify_sweeps(const std::filesystem::path& dir);

/// "jacobians", "identities", "sweeps" or "all". Throws ConfigError otherwise.
SuiteResult run_suite(std::string_view name, const std::filesystem::path& config_dir);

}  // namespace elicit

#endif  // ELICIT_VERIFY_HPP

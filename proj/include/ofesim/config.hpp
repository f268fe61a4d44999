#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "ofesim/scenario.hpp"

namespace ofesim {

/// JSON schema (every key optional; absent keys keep the published defaults):
///
///   grid          {"rows": 93, "ranges": 20}
///   levels        [0, 35, 70, 105, 140]
///   designs       ["randomised", "systematic"]
///   responses     ["linear", "quadratic"]
///   spatial       [{"kind": "NS"}, {"kind": "AR1", "rho_col": 0.15, "rho_row": 0.5},
///                  {"kind": "Matern", "sigma2": 1, "range": 1, "nu": 1.5}]
///   eta           [1, 0.1]
///   sigma_u       [5, 0.01, 0.0001]
///   sigma_e       1
///   b_linear      [65, 0.05]
///   b_quadratic   [65, 0.05, -0.0003]
///   bandwidths    [5, 9, "aicc"]
///   aicc_search   {"lower": 1, "upper": 93, "tolerance": 0.01, "scan_points": 40}
///   aicc_formula  "standard" | "paper-literal"
///   replicates    100
///   seed          unsigned 64-bit integer
///   threads       0 (= all cores)
///   emit_trials   false
///   out           output directory
///
/// Unknown keys are rejected.
ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& config);
ScenarioConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64-bit hash of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

}  // namespace ofesim

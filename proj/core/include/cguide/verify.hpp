#pragma once

#include "cguide/score_net.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace cguide {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;  // 0 = no runtime bound
  std::string detail;
  nlohmann::json metrics;

  nlohmann::json to_json() const;
};

/// Pinned settings of the verification suite.
struct VerifyConfig {
  std::uint64_t seed = 20240601;
  TrainConfig train;
  bool check_runtime = true;

  nlohmann::json to_json() const;
  static VerifyConfig from_json(const nlohmann::json& j, const std::string& path = "verify");
};

using CriterionFn = CriterionResult (*)(const VerifyConfig&);

CriterionResult check_derivation_identity(const VerifyConfig& cfg);  // 1
CriterionResult check_density_ode(const VerifyConfig& cfg);          // 2
CriterionResult check_lambda_ode(const VerifyConfig& cfg);           // 3
CriterionResult check_reductions(const VerifyConfig& cfg);           // 4
CriterionResult check_disentanglement(const VerifyConfig& cfg);      // 5
CriterionResult check_rig_sweep(const VerifyConfig& cfg);            // 6
CriterionResult check_tilted_direction(const VerifyConfig& cfg);     // 7
CriterionResult check_editing(const VerifyConfig& cfg);              // 8
CriterionResult check_learned_models(const VerifyConfig& cfg);       // 9

struct CriterionEntry {
  int id;
  std::string name;
  CriterionFn fn;
};
const std::vector<CriterionEntry>& criteria();

/// Runs the selected criteria (all when ids is empty), calling on_result as each finishes.
std::vector<CriterionResult> run_verify(const VerifyConfig& cfg, const std::vector<int>& ids = {},
                                        const std::function<void(const CriterionResult&)>& on_result = nullptr);

/// One line: "[PASS] 5 disentanglement ... (12.3 s) detail".
std::string format_result(const CriterionResult& r);

}  // namespace cguide

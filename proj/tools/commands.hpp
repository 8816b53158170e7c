#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace cguide::cli {

/// Command-line overrides; unset fields leave the config untouched.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<std::string> sampler;
  std::optional<double> eta;
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::optional<double> tau;
  std::optional<std::string> world;
  std::optional<std::string> prompt;
  std::optional<std::string> positive;
  std::optional<std::string> negative;
  std::optional<std::string> method;
  std::optional<std::string> search;
  std::optional<std::vector<double>> lambdas;
  std::optional<size_t> n;
  bool learned = false;
  std::vector<int> only;
};

enum ExitCode { kOk = 0, kUsage = 1, kNumeric = 2, kAcceptance = 3 };

/// Merges defaults, the config file contents and the overrides into the
/// fully resolved config that is echoed to config.json. Rerunning with the
/// echo as --config reproduces the run.
nlohmann::json resolve(const std::string& command, nlohmann::json config, const Overrides& o);

/// Executes a resolved config, writing artifacts under out. Returns the exit code.
int execute(const std::string& command, const nlohmann::json& resolved, const std::string& out);

}  // namespace cguide::cli

#pragma once

#include "cguide/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cguide::cli {

/// One run directory: config echo, seed, samples, metrics and plots.
class RunDir {
 public:
  explicit RunDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  void write_config(const nlohmann::json& config) const;
  void write_seed(std::uint64_t seed) const;
  void write_metrics(const nlohmann::json& metrics) const;
  /// Rows of the matrix, columns x0..x{d-1}; extra leading columns optional.
  void write_samples(const Matrix& samples, const std::vector<std::string>& tag_names = {},
                     const std::vector<std::vector<std::string>>& tags = {}, const std::string& name = "samples.csv") const;
  void write_text(const std::string& name, const std::string& text) const;

 private:
  std::filesystem::path root_;
};

/// Full-precision decimal that round-trips.
std::string num(double v);

}  // namespace cguide::cli

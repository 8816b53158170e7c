#pragma once

#include "cguide/world.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace cguide {

/// World file schema:
///
///   {
///     "dimension": 2,
///     "prompts": [
///       { "tokens": ["cat", "glasses"], "prior": 0.25,
///         "components": [ { "weight": 1.0, "mean": [2, 2], "variance": 1.0 } ] },
///       { "tokens": ["cat"],
///         "components": [ { "weight": 0.3, "mean": [2, 2], "cov": [[1, 0], [0, 1]] },
///                         { "weight": 0.7, "mean": [2, -2], "variance": 1.0 } ] }
///     ]
///   }
///
/// "prior" defaults to 0; "variance" (isotropic) and "cov" (full, row-major
/// nested arrays) are mutually exclusive, and a component with neither has
/// identity covariance. The empty prompt is derived and must not be listed.
/// Errors are ConfigError messages prefixed with the JSON path of the field.
World world_from_json(const nlohmann::json& j);
nlohmann::json world_to_json(const World& world);

World load_world(const std::filesystem::path& path);

}  // namespace cguide

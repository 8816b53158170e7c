#include "cguide/world_io.hpp"
#include "cguide/worlds.hpp"

#include <doctest.h>

#include <string>

using namespace cguide;

TEST_CASE("world JSON round trip is exact") {
  for (const auto& name : worlds::names()) {
    const World w = worlds::by_name(name);
    const World back = world_from_json(world_to_json(w));
    CHECK(world_to_json(back) == world_to_json(w));
    const NoiseSchedule s;
    const Vector x = Vector::Constant(w.dim(), 0.37);
    CHECK(log_density(PromptId(), x, 0.4, back, s) == log_density(PromptId(), x, 0.4, w, s));
  }
}

TEST_CASE("full covariances survive the round trip") {
  const auto j = nlohmann::json::parse(R"({"dimension": 2, "prompts": [
    {"tokens": ["a"], "prior": 1, "components": [{"weight": 1, "mean": [0, 1], "cov": [[2, 0.3], [0.3, 1]]}]}]})");
  const World w = world_from_json(j);
  CHECK(w.mixture(PromptId{"a"}).components()[0].cov()(0, 1) == doctest::Approx(0.3));
  CHECK(world_from_json(world_to_json(w)).mixture(PromptId{"a"}).components()[0].cov()(1, 0) == doctest::Approx(0.3));
}

namespace {

std::string error_of(const char* text) {
  try {
    world_from_json(nlohmann::json::parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("schema violations name the field path") {
  CHECK(error_of(R"({"prompts": []})").find("dimension") != std::string::npos);
  CHECK(error_of(R"({"dimension": 1, "prompts": [{"tokens": ["a"], "components": [{"mean": [1, 2]}]}]})")
            .find("prompts[0].components[0].mean") != std::string::npos);
  CHECK(error_of(R"({"dimension": 1, "prompts": [{"tokens": ["a"], "components": [{"mean": [1], "variance": -1}]}]})")
            .find("variance") != std::string::npos);
  CHECK(error_of(R"({"dimension": 1, "prompts": [{"tokens": [], "components": [{"mean": [1]}]}]})") != "");
  CHECK(error_of(R"({"dimension": 2, "prompts": [{"tokens": ["a"], "components": [{"mean": [1, 0], "cov": [[1, 2], [2, 1]]}]}]})") != "");
}

TEST_CASE("missing world file") { CHECK_THROWS_AS(load_world("/nonexistent/world.json"), ConfigError); }

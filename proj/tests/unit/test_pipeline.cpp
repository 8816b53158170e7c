#include "cguide/pipeline.hpp"
#include "cguide/worlds.hpp"

#include <doctest.h>

#include <sstream>

using namespace cguide;

namespace {

ExpertConfig small_config(double lambda) {
  ExpertConfig c;
  c.lambda = lambda;
  c.n = 200;
  c.steps = 100;
  return c;
}

}  // namespace

TEST_CASE("zero strength reproduces the expert for every arm") {
  const World w = worlds::expert();
  const AnalyticModel m(w, NoiseSchedule{});
  const ExpertReport r = run_expert_guidance(m, m.field(PromptId{"face"}), w, small_config(0.0));
  REQUIRE(r.arms.size() == 4);
  for (const auto& a : r.arms) CHECK(a.samples == r.arm("expert").samples);
  CHECK_THROWS_AS(r.arm("nope"), LookupError);
}

TEST_CASE("contrastive arm beats negative guidance on the concept") {
  const World w = worlds::expert();
  const AnalyticModel m(w, NoiseSchedule{});
  const ExpertReport r = run_expert_guidance(m, m.field(PromptId{"face"}), w, small_config(0.25));
  CHECK(r.arm("expert+contrastive").concept_score.value >= r.arm("expert+negative").concept_score.value);
  CHECK(r.arm("expert+contrastive").concept_score.value > r.arm("expert").concept_score.value);
  CHECK(r.arm("expert").concept_score.half_width.has_value());

  std::ostringstream csv;
  r.write_csv(csv);
  CHECK(csv.str().rfind("arm,energy_distance", 0) == 0);
  CHECK(r.to_json()["arms"].size() == 4);
}

TEST_CASE("expert config JSON") {
  ExpertConfig c = small_config(0.5);
  c.sampler = {SamplerKind::ddim, 0.3};
  const ExpertConfig back = ExpertConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(ExpertConfig::from_json(nlohmann::json{{"n", 5}}), ConfigError);
  CHECK_THROWS_AS(ExpertConfig::from_json(nlohmann::json{{"sampler", "rk4"}}), ConfigError);

  const World w = worlds::expert();
  const AnalyticModel m(w, NoiseSchedule{});
  ExpertConfig unknown = small_config(0.25);
  unknown.positive = PromptId{"zebra"};
  CHECK_THROWS_AS(run_expert_guidance(m, m.field(PromptId{"face"}), w, unknown), ConfigError);
}

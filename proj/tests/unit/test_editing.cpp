#include "cguide/editing.hpp"
#include "cguide/rng.hpp"
#include "cguide/worlds.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace cguide;
using testutil::vec;

namespace {

EditTask task_for(double x0) {
  EditTask task;
  task.x0 = vec({x0});
  task.source = PromptId{"neg"};
  task.target = PromptId{"pos"};
  return task;
}

}  // namespace

TEST_CASE("cycle decoding under the source field reconstructs the input") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  EditTask task = task_for(-1.7);
  task.target = task.source;
  task.t_e = 0.6;
  for (std::uint64_t seed : {1u, 2u, 3u}) CHECK(std::abs(cycle_edit(task, m, seed)[0] - task.x0[0]) < 1e-8);
}

TEST_CASE("sdedit depends on the seed") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  const EditTask task = task_for(-2.0);
  CHECK(sdedit(task, m, 1)[0] != sdedit(task, m, 2)[0]);
  CHECK(sdedit(task, m, 1)[0] == sdedit(task, m, 1)[0]);
}

TEST_CASE("encode time limits") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  EditTask small = task_for(-2.0);
  small.t_e = 2e-5;
  CHECK(std::abs(sdedit(small, m, 4)[0] - small.x0[0]) < 0.02);

  // From t_e = T the output forgets x0: alpha_T ~ 7e-3.
  EditTask a = task_for(-2.0), b = task_for(2.0);
  a.t_e = b.t_e = 1.0;
  CHECK(std::abs(sdedit(a, m, 9)[0] - sdedit(b, m, 9)[0]) < 0.1);

  EditTask bad = task_for(0.0);
  bad.t_e = 0.0;
  CHECK_THROWS_AS(bad.validate(m), DomainError);
  bad.t_e = 1.5;
  CHECK_THROWS_AS(bad.validate(m), DomainError);
}

TEST_CASE("cycle encoding needs positive eta") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  const TimeGrid g = TimeGrid::uniform(30, 0.3);
  CHECK_THROWS_AS(cycle_encode(m, vec({0.0}), PromptId{"neg"}, g, 0.0, 1), ConfigError);
  EditTask task = task_for(0.0);
  task.sampler = {SamplerKind::em_sde, 0.0};
  CHECK_THROWS_AS(cycle_edit(task, m, 1), ConfigError);
}

TEST_CASE("recovered noise is centred under the exact score") {
  const AnalyticModel m(worlds::standard_normal(1), NoiseSchedule{});
  const TimeGrid g = TimeGrid::uniform(20, 0.5);
  const Matrix x0s = GaussianMixture::single(GaussianComponent::isotropic(vec({0.0}))).sample(2000, 11);
  // Per-trajectory means are independent, so their spread gives an honest standard error.
  std::vector<double> means;
  for (Eigen::Index i = 0; i < x0s.rows(); ++i) {
    const CycleEncoding enc = cycle_encode(m, x0s.row(i).transpose(), PromptId(), g, kDefaultEditEta,
                                           stream_seed(5, static_cast<std::uint64_t>(i)));
    REQUIRE(enc.record.size() == static_cast<size_t>(g.n_steps()));
    double s = 0;
    for (const Vector& z : enc.record.z) s += z[0];
    means.push_back(s / static_cast<double>(enc.record.size()));
  }
  double mean = 0, var = 0;
  for (double v : means) mean += v;
  mean /= static_cast<double>(means.size());
  for (double v : means) var += (v - mean) * (v - mean);
  var /= static_cast<double>(means.size() - 1);
  CHECK(std::abs(mean) < 3 * std::sqrt(var / static_cast<double>(means.size())));
}

TEST_CASE("contrastive decoding moves edits toward the target") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  EditTask plain = task_for(-2.0), pushed = task_for(-2.0);
  pushed.lambda = kDefaultSdeditLambda;
  double gain = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    gain += directional_selector(m, pushed.source, pushed.target, pushed.x0, sdedit(pushed, m, seed)) -
            directional_selector(m, plain.source, plain.target, plain.x0, sdedit(plain, m, seed));
  CHECK(gain > 0.0);
}

TEST_CASE("selector and best index") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  CHECK(directional_selector(m, PromptId{"neg"}, PromptId{"pos"}, vec({-1.0}), vec({-1.0})) == 0.0);
  // log N(x; 2, 1) - log N(x; -2, 1) = 4x at t = 0.
  CHECK(directional_selector(m, PromptId{"neg"}, PromptId{"pos"}, vec({-1.0}), vec({0.5})) ==
        doctest::Approx(6.0).epsilon(1e-4));
  CHECK(select_best({1.0, 3.0, 3.0, 2.0}) == 1);
  CHECK_THROWS_AS(select_best({}), ConfigError);
}

TEST_CASE("edit task JSON round trip") {
  EditTask t = task_for(1.25);
  t.t_e = 0.4;
  t.tau = 2.0;
  t.lambda = 6.0;
  t.sampler.eta = 0.2;
  t.steps_per_unit = 50;
  const EditTask back = edit_task_from_json(edit_task_to_json(t));
  CHECK(edit_task_to_json(back) == edit_task_to_json(t));
  CHECK(back.x0 == t.x0);
  CHECK(back.steps_per_unit == 50);
  CHECK_THROWS_AS(edit_task_from_json(nlohmann::json{{"source", "a"}}), ConfigError);
  CHECK(parse_edit_method("cycle") == EditMethod::cycle);
  CHECK_THROWS_AS(parse_edit_method("inpaint"), ConfigError);
}

#include "cguide/guidance.hpp"
#include "cguide/worlds.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace cguide;
using testutil::vec;

namespace {

const AnalyticModel& two_prompt_model() {
  static const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  return m;
}

}  // namespace

TEST_CASE("step schedule evaluation and round trip") {
  const StepSchedule s({0.3, 0.6}, {1.0, 2.0, 3.0});
  CHECK(s(0.1) == 1.0);
  CHECK(s(0.3) == 2.0);
  CHECK(s(0.59) == 2.0);
  CHECK(s(0.6) == 3.0);
  CHECK(s(1.0) == 3.0);
  CHECK_FALSE(s.is_constant());
  CHECK_FALSE(s.is_zero());
  CHECK(StepSchedule(0.0).is_zero());
  CHECK(StepSchedule({0.5}, {0.0, 0.0}).is_zero());

  const StepSchedule back = StepSchedule::from_json(s.to_json(), "s");
  for (double t : {0.0, 0.3, 0.45, 0.6, 0.9}) CHECK(back(t) == s(t));
  CHECK(StepSchedule::from_json(2.5, "s")(0.7) == 2.5);

  CHECK_THROWS_AS(StepSchedule({0.5, 0.4}, {1, 2, 3}), ConfigError);
  CHECK_THROWS_AS(StepSchedule({0.5}, {1}), ConfigError);
  CHECK_THROWS_AS(StepSchedule::from_json("x", "s"), ConfigError);
}

TEST_CASE("cfg with tau = 1 is the conditional score") {
  const AnalyticModel& m = two_prompt_model();
  const Vector x = vec({0.7});
  for (double t : {0.05, 0.5, 0.95})
    CHECK(cfg_score(m, PromptId{"pos"}, 1.0, x, t) == m.score(PromptId{"pos"}, x, t));
}

TEST_CASE("contrastive against the empty prompt is cfg") {
  const AnalyticModel& m = two_prompt_model();
  const ScoreField cond = m.field(PromptId{"pos"});
  for (double lambda : {0.5, 1.0, 2.0, 3.0}) {
    for (double x0 : {-1.5, 0.2, 2.4}) {
      const Vector x = vec({x0});
      const Vector c = contrastive_score(cond, m, PromptId{"pos"}, PromptId(), LambdaSpec::constant(lambda), x, 0.4);
      CHECK(c == cfg_score(m, PromptId{"pos"}, 1.0 + lambda, x, 0.4));
    }
  }
}

TEST_CASE("exact classifier matches a hand-computed logistic") {
  const AnalyticModel& m = two_prompt_model();
  const Contrast c{PromptId{"pos"}, PromptId{"neg"}};
  // Near t = 0 the log-likelihood ratio at x = 2 is (16 - 0) / 2 = 8.
  const double p = classifier_prob(m, c, vec({2.0}), 1e-5);
  CHECK(p == doctest::Approx(1.0 / (1.0 + std::exp(-8.0))).epsilon(1e-4));
  CHECK(lambda_exact(m, c, vec({2.0}), 1e-5) == doctest::Approx(1.0 - p));

  // At any t the two Gaussians share variance, so the log-odds are linear in x.
  const NoiseSchedule& s = m.schedule();
  const double t = 0.3, a = s.alpha(t), x = 0.4;
  const double logit = 2 * a * 2 * x;  // ((x + 2a)^2 - (x - 2a)^2) / 2 with unit variance
  CHECK(classifier_prob(m, c, vec({x}), t) == doctest::Approx(1 / (1 + std::exp(-logit))).epsilon(1e-10));

  Contrast hot = c;
  hot.gamma = 2.0;
  hot.prior_positive = 0.25;
  hot.prior_negative = 0.75;
  const double hot_logit = 2 * logit + std::log(0.25 / 0.75);
  CHECK(classifier_prob(m, hot, vec({x}), t) == doctest::Approx(1 / (1 + std::exp(-hot_logit))).epsilon(1e-10));
  CHECK(lambda_exact(m, hot, vec({x}), t) == doctest::Approx(2.0 / (1 + std::exp(hot_logit))).epsilon(1e-10));
}

TEST_CASE("compose: zero coefficients leave the base untouched") {
  const AnalyticModel& m = two_prompt_model();
  GuidanceSpec spec;
  spec.base.kind = GuidanceBase::Kind::conditional;
  spec.base.prompt = PromptId{"pos"};
  spec.terms.push_back(GuidanceTerm::contrastive(PromptId{"pos"}, PromptId{"neg"}, LambdaSpec::constant(0.0)));
  spec.terms.push_back(GuidanceTerm::negation(PromptId{"neg"}, StepSchedule({0.5}, {0.0, 1.0})));
  const ScoreField f = compose(spec, m);
  const Vector x = vec({0.3});
  CHECK(f(x, 0.2) == m.score(PromptId{"pos"}, x, 0.2));
  // Above the knot the negation term switches on.
  const Vector expect = m.score(PromptId{"pos"}, x, 0.7) + (m.score(PromptId(), x, 0.7) - m.score(PromptId{"neg"}, x, 0.7));
  CHECK((f(x, 0.7) - expect).norm() < 1e-14);
}

TEST_CASE("compose adds each term to the base") {
  const AnalyticModel& m = two_prompt_model();
  const ScoreField expert = [](const Vector& x, double) -> Vector { return -x; };
  GuidanceSpec spec;
  spec.base.kind = GuidanceBase::Kind::field;
  spec.terms.push_back(GuidanceTerm::cfg(PromptId{"pos"}, 0.5));
  spec.terms.push_back(GuidanceTerm::contrastive(PromptId{"pos"}, PromptId{"neg"}, LambdaSpec::constant(2.0)));
  const ScoreField f = compose(spec, m, expert);
  const Vector x = vec({-0.6});
  const double t = 0.35;
  const Vector sp = m.score(PromptId{"pos"}, x, t), sn = m.score(PromptId{"neg"}, x, t), s0 = m.score(PromptId(), x, t);
  const Vector expect = -x + 0.5 * (sp - s0) + 2.0 * (sp - sn);
  CHECK((f(x, t) - expect).norm() < 1e-13);
}

TEST_CASE("exact-mode coefficient follows the classifier") {
  const AnalyticModel& m = two_prompt_model();
  const Vector x = vec({1.1});
  const double v = lambda_value(m, PromptId{"pos"}, PromptId{"neg"}, LambdaSpec::exact(1.5, 0.4, 0.6), x, 0.25);
  const Contrast c{PromptId{"pos"}, PromptId{"neg"}, 1.5, 0.4, 0.6};
  CHECK(v == doctest::Approx(lambda_exact(m, c, x, 0.25)));
  CHECK(v > 0.0);
  CHECK(v < 1.5);
}

TEST_CASE("guidance spec JSON round trip") {
  GuidanceSpec spec;
  spec.base.kind = GuidanceBase::Kind::cfg;
  spec.base.prompt = PromptId{"pos"};
  spec.base.tau = StepSchedule({0.5}, {1.0, 3.0});
  spec.terms.push_back(GuidanceTerm::contrastive(PromptId{"pos"}, PromptId{"neg"}, LambdaSpec::exact(2.0, 0.3, 0.7)));
  spec.terms.push_back(GuidanceTerm::negation(PromptId{"neg"}, 1.25));
  const GuidanceSpec back = GuidanceSpec::from_json(spec.to_json());
  CHECK(back.to_json() == spec.to_json());

  const AnalyticModel& m = two_prompt_model();
  const ScoreField f1 = compose(spec, m), f2 = compose(back, m);
  const Vector x = vec({0.9});
  for (double t : {0.1, 0.6}) CHECK(f1(x, t) == f2(x, t));
}

TEST_CASE("validation rejects unknown prompts and missing fields") {
  const AnalyticModel& m = two_prompt_model();
  GuidanceSpec spec;
  spec.base.prompt = PromptId{"pos"};
  CHECK_NOTHROW(validate(spec, m, false));
  spec.terms.push_back(GuidanceTerm::contrastive(PromptId{"pos"}, PromptId{"zebra"}, LambdaSpec::constant(1.0)));
  CHECK_THROWS_AS(validate(spec, m, false), ConfigError);

  GuidanceSpec field_spec;
  field_spec.base.kind = GuidanceBase::Kind::field;
  CHECK_THROWS_AS(validate(field_spec, m, false), ConfigError);
  CHECK_NOTHROW(validate(field_spec, m, true));
  CHECK_THROWS_AS(GuidanceSpec::from_json(nlohmann::json{{"base", {{"kind", "bogus"}}}}), ConfigError);
}

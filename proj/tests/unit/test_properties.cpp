// Properties checked over randomly generated worlds. Each case draws its own
// world, prompt, point and time from a seeded generator.
#include "cguide/analysis.hpp"
#include "cguide/guidance.hpp"
#include "cguide/rng.hpp"
#include "cguide/worlds.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace cguide;

namespace {

constexpr int kCases = 60;

struct Draw {
  World world;
  PromptId pos{"p"}, neg{"n"};
  Vector x;
  double t;
};

Draw draw(std::uint64_t seed) {
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(1 + rng.uniform() * 3);
  Draw out{worlds::random(rng, d), {"p"}, {"n"}, Vector(), 0.0};
  out.t = 0.05 + 0.9 * rng.uniform();
  out.x = 2.0 * rng.normal_vector(d);
  return out;
}

}  // namespace

TEST_CASE("property: exact scores are gradients of the exact log-density") {
  for (std::uint64_t s = 0; s < kCases; ++s) {
    const Draw c = draw(stream_seed(100, s));
    const AnalyticModel m(c.world, NoiseSchedule{});
    for (const PromptId& y : {c.pos, c.neg, PromptId()}) {
      const Vector fd = testutil::fd_gradient([&](const Vector& v) { return *m.log_density(y, v, c.t); }, c.x);
      const Vector exact = m.score(y, c.x, c.t);
      CAPTURE(s);
      CHECK((fd - exact).norm() <= 1e-5 * std::max(1.0, exact.norm()));
    }
  }
}

TEST_CASE("property: guidance reductions hold bit for bit") {
  for (std::uint64_t s = 0; s < kCases; ++s) {
    const Draw c = draw(stream_seed(200, s));
    const AnalyticModel m(c.world, NoiseSchedule{});
    CAPTURE(s);
    CHECK(cfg_score(m, c.pos, 1.0, c.x, c.t) == m.score(c.pos, c.x, c.t));
    const double lambda = std::ldexp(1.0, static_cast<int>(s % 5) - 2);  // 1/4 .. 4
    const Vector con = contrastive_score(m.field(c.pos), m, c.pos, PromptId(), LambdaSpec::constant(lambda), c.x, c.t);
    CHECK(con == cfg_score(m, c.pos, 1.0 + lambda, c.x, c.t));

    GuidanceSpec spec;
    spec.base.prompt = c.pos;
    spec.terms.push_back(GuidanceTerm::contrastive(c.pos, c.neg, LambdaSpec::constant(0.0)));
    spec.terms.push_back(GuidanceTerm::negation(c.neg, 0.0));
    CHECK(compose(spec, m)(c.x, c.t) == m.score(c.pos, c.x, c.t));
  }
}

TEST_CASE("property: swapping the contrast complements the classifier") {
  for (std::uint64_t s = 0; s < kCases; ++s) {
    const Draw c = draw(stream_seed(300, s));
    const AnalyticModel m(c.world, NoiseSchedule{});
    Rng rng(s);
    const double prior = 0.1 + 0.8 * rng.uniform(), gamma = 0.5 + 2 * rng.uniform();
    const Contrast fwd{c.pos, c.neg, gamma, prior, 1 - prior};
    const Contrast rev{c.neg, c.pos, gamma, 1 - prior, prior};
    const double p = classifier_prob(m, fwd, c.x, c.t);
    CAPTURE(s);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(p + classifier_prob(m, rev, c.x, c.t) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lambda_exact(m, fwd, c.x, c.t) == doctest::Approx(gamma * (1 - p)).epsilon(1e-12));
  }
}

TEST_CASE("property: energy distance is symmetric and non-negative") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Draw c = draw(stream_seed(400, s));
    const Matrix a = c.world.mixture(c.pos).sample(80, s), b = c.world.mixture(c.neg).sample(60, s + 1);
    const double ab = energy_distance(a, b);
    CAPTURE(s);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(energy_distance(b, a)).epsilon(1e-12));
    CHECK(energy_distance(a, a) == 0.0);
  }
}

TEST_CASE("property: the contrastive likelihood score is antisymmetric") {
  for (std::uint64_t s = 0; s < kCases; ++s) {
    const Draw c = draw(stream_seed(500, s));
    const AnalyticModel m(c.world, NoiseSchedule{});
    CHECK(contrastive_likelihood_score(m, c.x, c.pos, c.neg) == -contrastive_likelihood_score(m, c.x, c.neg, c.pos));
  }
}

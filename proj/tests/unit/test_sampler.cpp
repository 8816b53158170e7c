#include "cguide/analysis.hpp"
#include "cguide/model.hpp"
#include "cguide/rng.hpp"
#include "cguide/sampler.hpp"
#include "cguide/worlds.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>

using namespace cguide;
using testutil::vec;

TEST_CASE("every sampler reproduces N(0, 1) on the standard-normal world") {
  const AnalyticModel model(worlds::standard_normal(1), NoiseSchedule{});
  const size_t n = 10000;
  const Matrix reference = GaussianMixture::single(GaussianComponent::isotropic(vec({0.0}))).sample(n, 999);
  for (SamplerKind kind : {SamplerKind::em_sde, SamplerKind::pf_ode, SamplerKind::ddim}) {
    CAPTURE(to_string(kind));
    const Matrix xs = sample_endpoints(model.field(PromptId()), TimeGrid::uniform(500), model.schedule(),
                                       {kind, 0.1}, 1, n, 17);
    const double ed = energy_distance(xs, reference);
    std::vector<double> null = energy_distance_permutation_null(xs, reference, 200, 5);
    std::sort(null.begin(), null.end());
    CHECK(ed < null[197]);  // 99th percentile
  }
}

TEST_CASE("probability-flow Heun integration is second order") {
  // Gaussian data N(mu, v): the flow keeps (x - alpha mu) / sqrt(alpha^2 v + sigma^2) fixed.
  World w(1);
  const double mu = 1.5, v = 0.3;
  w.add(PromptId{"a"}, GaussianMixture::single(GaussianComponent::isotropic(vec({mu}), v)), 1.0);
  const AnalyticModel model(w, NoiseSchedule{});
  const NoiseSchedule& s = model.schedule();
  const double t_end = 0.05, x_start = 0.8;
  const auto scale = [&](double t) { return std::sqrt(s.alpha(t) * s.alpha(t) * v + s.sigma(t) * s.sigma(t)); };
  const double exact = s.alpha(t_end) * mu + scale(t_end) * (x_start - s.alpha(1.0) * mu) / scale(1.0);
  std::vector<double> errs;
  for (int steps : {25, 50, 100}) {
    const NoiseRecord none{std::vector<Vector>(static_cast<size_t>(steps), Vector::Zero(1))};
    const Trajectory tr = replay(model.field(PromptId{"a"}), TimeGrid::uniform(steps, 1.0, t_end), s,
                                 {SamplerKind::pf_ode, 0.0}, vec({x_start}), none, false);
    errs.push_back(std::abs(tr.endpoint()[0] - exact));
  }
  CHECK(std::log2(errs[0] / errs[1]) > 1.8);
  CHECK(std::log2(errs[1] / errs[2]) > 1.8);
}

TEST_CASE("replaying recorded noise is deterministic") {
  const AnalyticModel model(worlds::two_prompt(), NoiseSchedule{});
  const TimeGrid g = TimeGrid::uniform(100);
  for (SamplerKind kind : {SamplerKind::em_sde, SamplerKind::pf_ode, SamplerKind::ddim}) {
    const Trajectory a = sample(model.field(PromptId()), g, model.schedule(), {kind, 0.3}, 1, 77, true);
    REQUIRE(a.noise.has_value());
    const Trajectory b =
        replay(model.field(PromptId()), g, model.schedule(), {kind, 0.3}, a.states.front().x, *a.noise);
    CHECK(a.endpoint() == b.endpoint());
    CHECK(a.states.size() == static_cast<size_t>(g.n_steps() + 1));
  }
}

TEST_CASE("deterministic DDIM ignores the per-step noise") {
  const AnalyticModel model(worlds::two_prompt(), NoiseSchedule{});
  const TimeGrid g = TimeGrid::uniform(50);
  const TrajectoryNoise n1 = draw_noise(g, 1, 1), n2 = draw_noise(g, 1, 2);
  const SamplerConfig ddim0{SamplerKind::ddim, 0.0};
  CHECK_FALSE(ddim0.stochastic());
  const Vector a = replay(model.field(PromptId()), g, model.schedule(), ddim0, n1.x_start, n1.record, false).endpoint();
  const Vector b = replay(model.field(PromptId()), g, model.schedule(), ddim0, n1.x_start, n2.record, false).endpoint();
  CHECK(a == b);
}

TEST_CASE("DDIM coefficients") {
  const NoiseSchedule s;
  const DdimCoefficients c0 = ddim_coefficients(0.6, 0.5, 0.0, s);
  CHECK(c0.noise_scale == 0.0);
  CHECK(c0.dir == doctest::Approx(s.sigma(0.5)));
  const DdimCoefficients c1 = ddim_coefficients(0.6, 0.5, 1.0, s);
  // eta = 1: noise variance is the posterior variance of the VP kernel.
  const double a = s.alpha(0.6), ap = s.alpha(0.5), sg = s.sigma(0.6), sp = s.sigma(0.5);
  const double post = sp * sp / (sg * sg) * (1 - a * a / (ap * ap));
  CHECK(c1.noise_scale * c1.noise_scale == doctest::Approx(post).epsilon(1e-10));
  CHECK(c1.dir * c1.dir + c1.noise_scale * c1.noise_scale == doctest::Approx(sp * sp));
}

TEST_CASE("endpoints follow the per-index seed stream") {
  const AnalyticModel model(worlds::two_prompt(), NoiseSchedule{});
  const TimeGrid g = TimeGrid::uniform(40);
  const Matrix xs = sample_endpoints(model.field(PromptId()), g, model.schedule(), {}, 1, 8, 123);
  for (size_t i = 0; i < 8; ++i)
    CHECK(xs(static_cast<Eigen::Index>(i), 0) ==
          sample(model.field(PromptId()), g, model.schedule(), {}, 1, stream_seed(123, i)).endpoint()[0]);
}

TEST_CASE("diverging trajectories raise a numeric error") {
  const ScoreField bad = [](const Vector& x, double) -> Vector { return 1e300 * (x.array() + 1.0).matrix(); };
  CHECK_THROWS_AS(sample(bad, TimeGrid::uniform(20), NoiseSchedule{}, {}, 1, 1), NumericError);
}

TEST_CASE("sampler names") {
  CHECK(parse_sampler("em") == SamplerKind::em_sde);
  CHECK(parse_sampler("ode") == SamplerKind::pf_ode);
  CHECK(parse_sampler("ddim") == SamplerKind::ddim);
  CHECK(parse_sampler(to_string(SamplerKind::pf_ode)) == SamplerKind::pf_ode);
  CHECK_THROWS_AS(parse_sampler("rk4"), ConfigError);
}

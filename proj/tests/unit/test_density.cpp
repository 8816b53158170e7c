#include "cguide/density.hpp"
#include "cguide/guidance.hpp"
#include "cguide/worlds.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace cguide;
using testutil::vec;

TEST_CASE("exact divergence of a linear drift is its trace") {
  Matrix a(3, 3);
  a << 1.5, 0.2, -0.7, 0.4, -2.0, 0.1, 0.3, 0.9, 0.25;
  const DriftField f = [&](const Vector& x, double) -> Vector { return a * x; };
  CHECK(divergence(f, vec({0.3, -1.2, 4.0}), 0.5, {}) == doctest::Approx(a.trace()).epsilon(1e-9));
}

TEST_CASE("hutchinson probes are unbiased") {
  Matrix a(3, 3);
  a << 1.5, 0.2, -0.7, 0.4, -2.0, 0.1, 0.3, 0.9, 0.25;
  const DriftField f = [&](const Vector& x, double) -> Vector { return a * x; };
  Rng rng(3);
  const DivergenceConfig cfg{DivergenceConfig::Mode::hutchinson, 1};
  const int n = 4000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = divergence(f, vec({1.0, 2.0, -0.5}), 0.5, cfg, &rng);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - a.trace()) < 4 * se);
  CHECK(se > 0.0);
  CHECK_THROWS_AS(divergence(f, vec({1.0, 2.0, -0.5}), 0.5, cfg, nullptr), ConfigError);
}

TEST_CASE("ODE log-density matches the closed form") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  OdeDensityConfig cfg;
  cfg.n_steps = 256;
  cfg.exact_terminal = true;
  for (double x0 : {-2.5, 0.0, 1.3}) {
    for (double t : {0.05, 0.5}) {
      CAPTURE(x0);
      CAPTURE(t);
      const double ode = log_density_ode(m, PromptId{"pos"}, vec({x0}), t, cfg).log_density;
      CHECK(ode == doctest::Approx(*m.log_density(PromptId{"pos"}, vec({x0}), t)).epsilon(2e-3));
    }
  }
}

TEST_CASE("standard normal data needs no terminal correction") {
  const AnalyticModel m(worlds::standard_normal(2), NoiseSchedule{});
  const Vector x = vec({0.4, -1.1});
  const DensityEstimate est = log_density_ode(m, PromptId(), x, 0.2);
  CHECK(std::abs(est.log_density - log_standard_normal(x)) < 1e-6);
  CHECK(est.n_steps == 512);
}

TEST_CASE("ODE coefficient agrees with the closed-form classifier") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  const Contrast c{PromptId{"pos"}, PromptId{"neg"}};
  OdeDensityConfig cfg;
  cfg.n_steps = 256;
  cfg.exact_terminal = true;
  for (double x0 : {-0.5, 0.3}) {
    CHECK(std::abs(lambda_via_ode(m, c, vec({x0}), 0.3, cfg) - lambda_exact(m, c, vec({x0}), 0.3)) < 1e-3);
  }
}

TEST_CASE("density configuration errors") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  OdeDensityConfig cfg;
  cfg.n_steps = 8;
  CHECK_THROWS_AS(log_density_ode(m, PromptId{"pos"}, vec({0.0}), 0.5, cfg), ConfigError);
  CHECK_THROWS_AS(log_density_ode(m, PromptId{"pos"}, vec({0.0}), 1.5), DomainError);
  const DriftField bad = [](const Vector& x, double) -> Vector { return x * std::nan(""); };
  CHECK_THROWS_AS(divergence(bad, vec({1.0}), 0.5, {}), NumericError);
}

#include "cguide/analysis.hpp"
#include "cguide/guidance.hpp"
#include "cguide/worlds.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace cguide;
using testutil::vec;

namespace {

// Direct O(n^2) V-statistic, independent of the library's sorted path.
double brute_energy(const Matrix& a, const Matrix& b) {
  auto mean_dist = [](const Matrix& p, const Matrix& q) {
    double s = 0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < q.rows(); ++j) s += (p.row(i) - q.row(j)).norm();
    return s / static_cast<double>(p.rows() * q.rows());
  };
  return 2 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b);
}

Matrix normal_rows(size_t n, Eigen::Index d, double shift, std::uint64_t seed) {
  return GaussianMixture::single(GaussianComponent::isotropic(Vector::Constant(d, shift))).sample(n, seed);
}

}  // namespace

TEST_CASE("energy distance of identical sets is exactly zero") {
  for (Eigen::Index d : {1, 3}) {
    const Matrix a = normal_rows(200, d, 0.0, 1);
    CHECK(energy_distance(a, a) == 0.0);
  }
}

TEST_CASE("energy distance matches the direct double sum") {
  for (Eigen::Index d : {1, 2}) {
    const Matrix a = normal_rows(150, d, 0.0, 2), b = normal_rows(170, d, 0.5, 3);
    CHECK(energy_distance(a, b) == doctest::Approx(brute_energy(a, b)).epsilon(1e-10));
  }
}

TEST_CASE("permutation null separates shifted samples") {
  const Matrix a = normal_rows(300, 1, 0.0, 4), b = normal_rows(300, 1, 1.0, 5), c = normal_rows(300, 1, 0.0, 6);
  const std::vector<double> null = energy_distance_permutation_null(a, b, 100, 7);
  REQUIRE(null.size() == 100);
  const double ed = energy_distance(a, b);
  for (double v : null) {
    CHECK(v >= 0.0);
    CHECK(v < ed);
  }
  CHECK(energy_distance(a, c) < ed);
}

TEST_CASE("gaussian W2 closed forms") {
  const Matrix i2 = Matrix::Identity(2, 2);
  CHECK(gaussian_w2(vec({1, 2}), i2, vec({1, 2}), i2) == doctest::Approx(0.0));
  CHECK(gaussian_w2(vec({0, 0}), i2, vec({3, 0}), i2) == doctest::Approx(3.0));
  CHECK(gaussian_w2(vec({0, 0}), i2, vec({0, 0}), 4 * i2) == doctest::Approx(std::sqrt(2.0)));
  Matrix bad = i2;
  bad(1, 1) = -1;
  CHECK_THROWS_AS(gaussian_w2(vec({0, 0}), bad, vec({0, 0}), i2), DomainError);
}

TEST_CASE("sample moments") {
  Matrix x(4, 2);
  x << 1, 0, 3, 2, 5, 4, 7, 6;
  const Moments m = sample_moments(x);
  CHECK(m.mean[0] == doctest::Approx(4.0));
  CHECK(m.mean[1] == doctest::Approx(3.0));
  CHECK(m.covariance(0, 0) == doctest::Approx(20.0 / 3.0));
  CHECK(m.covariance(0, 1) == doctest::Approx(20.0 / 3.0));
}

TEST_CASE("contrastive likelihood score") {
  const AnalyticModel m(worlds::two_prompt(), NoiseSchedule{});
  // log N(2; 2, 1) - log N(2; -2, 1) = 8.
  CHECK(contrastive_likelihood_score(m, vec({2.0}), PromptId{"pos"}, PromptId{"neg"}) ==
        doctest::Approx(8.0).epsilon(1e-4));
  const Vector x = vec({-0.7});
  CHECK(contrastive_likelihood_score(m, x, PromptId{"pos"}, PromptId{"neg"}) ==
        -contrastive_likelihood_score(m, x, PromptId{"neg"}, PromptId{"pos"}));
  CHECK(contrastive_likelihood_score(m, x, PromptId{"pos"}, PromptId{"pos"}) == 0.0);
}

TEST_CASE("bootstrap half-width") {
  std::vector<double> few(29, 1.0);
  CHECK_FALSE(bootstrap_half_width(few, 1).has_value());
  const Matrix xs = normal_rows(400, 1, 0.0, 8);
  std::vector<double> values(xs.data(), xs.data() + xs.size());
  const auto hw = bootstrap_half_width(values, 2);
  REQUIRE(hw.has_value());
  const double normal_theory = 1.96 * std::sqrt(sample_moments(xs).covariance(0, 0) / 400.0);
  CHECK(*hw == doctest::Approx(normal_theory).epsilon(0.2));
  const MetricReport r = mean_metric("x", values, 2);
  CHECK(r.n == 400);
  CHECK(r.to_json()["half_width"].is_number());
  CHECK(mean_metric("x", few, 2).to_json()["half_width"].is_null());
}

TEST_CASE("paired displacement") {
  const AnalyticModel m(worlds::linear(), NoiseSchedule{});
  const PromptId scene{"scene"}, warm{"scene", "warm"}, cool{"scene", "cool"};
  SamplingSetup setup;
  setup.grid = TimeGrid::uniform(200);
  setup.dim = 2;
  const ScoreField base = m.field(scene);
  const DisplacementStats none = paired_displacement(base, base, 50, setup, 3);
  CHECK(none.mean_l2 == 0.0);
  CHECK(none.p90_l2 == 0.0);

  // The warm/cool score difference is constant in x, so the guided dynamics
  // are the base plus a lambda-linear forcing and +-lambda displace oppositely.
  auto field_for = [&](double lambda) {
    GuidanceSpec spec;
    spec.base.prompt = scene;
    spec.terms.push_back(GuidanceTerm::contrastive(warm, cool, LambdaSpec::constant(lambda)));
    return spec;
  };
  const GuidanceSpec up = field_for(1.0), down = field_for(-1.0);
  const DisplacementStats plus = paired_displacement(base, compose(up, m), 50, setup, 3);
  const DisplacementStats minus = paired_displacement(base, compose(down, m), 50, setup, 3);
  CHECK(plus.n == 50);
  CHECK((plus.mean_signed + minus.mean_signed).norm() < 1e-9);
  CHECK(plus.mean_signed[0] > 0.0);
  CHECK(std::abs(plus.mean_signed[1]) < 1e-9);
  CHECK(plus.mean_l2 == doctest::Approx(minus.mean_l2).epsilon(1e-9));
}

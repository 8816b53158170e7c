#include "cguide/mixture.hpp"
#include "cguide/rng.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace cguide;
using testutil::vec;

TEST_CASE("one-dimensional mixture density against the written-out formula") {
  const GaussianMixture m({0.3, 0.7}, {GaussianComponent::isotropic(vec({-1.0}), 0.5),
                                       GaussianComponent::isotropic(vec({2.0}), 2.0)});
  const double a = 0.8, s = 0.6;
  for (double x : {-3.0, -1.0, 0.0, 0.7, 4.0}) {
    const double v1 = a * a * 0.5 + s * s, v2 = a * a * 2.0 + s * s;
    const double p = 0.3 * std::exp(testutil::log_normal_1d(x, -a, v1)) +
                     0.7 * std::exp(testutil::log_normal_1d(x, 2 * a, v2));
    CHECK(m.log_density(vec({x}), a, s) == doctest::Approx(std::log(p)).epsilon(1e-12));
  }
}

TEST_CASE("score equals the gradient of the log-density") {
  Matrix cov(2, 2);
  cov << 1.5, 0.4, 0.4, 0.7;
  const GaussianMixture m({1.0, 2.0}, {GaussianComponent(vec({1.0, -1.0}), cov),
                                       GaussianComponent::isotropic(vec({-2.0, 0.5}), 0.3)});
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vector x = 2.0 * rng.normal_vector(2);
    const double a = rng.uniform(), s = std::sqrt(1 - a * a);
    const Vector fd = testutil::fd_gradient([&](const Vector& y) { return m.log_density(y, a, s); }, x);
    CHECK((m.score(x, a, s) - fd).norm() <= 1e-7 * (1 + fd.norm()));
    Vector sc;
    CHECK(m.log_density_and_score(x, a, s, sc) == doctest::Approx(m.log_density(x, a, s)));
    CHECK((sc - m.score(x, a, s)).norm() < 1e-12);
  }
}

TEST_CASE("far from every component the log-density stays finite") {
  const GaussianMixture m({0.5, 0.5}, {GaussianComponent::isotropic(vec({-2.0})), GaussianComponent::isotropic(vec({2.0}))});
  const double ld = m.log_density(vec({200.0}));
  CHECK(std::isfinite(ld));
  CHECK(ld == doctest::Approx(std::log(0.5) + testutil::log_normal_1d(200.0, 2.0, 1.0)));
  CHECK(m.score(vec({200.0}))[0] == doctest::Approx(-198.0));
}

TEST_CASE("perturbed mixture and sample moments") {
  Matrix cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  const GaussianMixture m({0.25, 0.75}, {GaussianComponent(vec({1.0, 0.0}), cov),
                                         GaussianComponent::isotropic(vec({-1.0, 2.0}), 0.5)});
  const GaussianMixture p = m.perturbed(0.5, std::sqrt(0.75));
  CHECK(p.components()[0].mean()[0] == doctest::Approx(0.5));
  CHECK(p.components()[0].cov()(0, 0) == doctest::Approx(0.25 * 2.0 + 0.75));
  CHECK(p.components()[0].cov()(0, 1) == doctest::Approx(0.25 * 0.5));

  const Matrix xs = m.sample(40000, 11);
  const Vector mean = xs.colwise().mean();
  CHECK((mean - m.mean()).norm() < 0.03);
  const Matrix c = xs.rowwise() - mean.transpose();
  const Matrix emp = c.transpose() * c / static_cast<double>(xs.rows() - 1);
  CHECK((emp - m.covariance()).cwiseAbs().maxCoeff() < 0.06);
}

TEST_CASE("invalid mixtures are rejected") {
  CHECK_THROWS(GaussianMixture({1.0}, {}));
  CHECK_THROWS(GaussianMixture({-1.0}, {GaussianComponent::isotropic(vec({0.0}))}));
  Matrix bad(1, 1);
  bad << -1.0;
  CHECK_THROWS(GaussianComponent(vec({0.0}), bad));
}

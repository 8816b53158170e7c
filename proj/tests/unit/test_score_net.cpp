#include "cguide/score_net.hpp"
#include "cguide/rng.hpp"
#include "cguide/worlds.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace cguide;
using testutil::vec;

namespace {

LearnedScoreModel small_net() { return LearnedScoreModel(2, {"pos", "neg"}, NoiseSchedule{}, 42); }

}  // namespace

TEST_CASE("analytic gradient matches finite differences") {
  LearnedScoreModel net = small_net();
  LearnedScoreModel::Batch batch;
  batch.x = Matrix(2, 3);
  batch.x << 0.5, -1.0, 2.0, 0.1, 0.3, -0.4;
  batch.t = vec({0.2, 0.5, 0.9});
  batch.token_counts = Matrix::Zero(2, 3);
  batch.token_counts(0, 0) = 1;
  batch.token_counts(1, 2) = 1;
  Matrix target(2, 3);
  target << 0.3, -0.2, 1.0, 0.7, 0.0, -1.1;

  const Vector p0 = net.parameters();
  Vector grads = Vector::Zero(p0.size());
  net.loss_and_gradient(batch, target, grads);

  Rng rng(1);
  for (int k = 0; k < 40; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(p0.size()));
    const double h = 1e-6;
    Vector scratch = Vector::Zero(p0.size());
    Vector p = p0;
    p[i] += h;
    net.set_parameters(p);
    const double up = net.loss_and_gradient(batch, target, scratch);
    p[i] -= 2 * h;
    net.set_parameters(p);
    const double down = net.loss_and_gradient(batch, target, scratch);
    CAPTURE(i);
    CHECK(grads[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4).scale(1e-6));
  }
  net.set_parameters(p0);
}

TEST_CASE("score is the scaled negative noise prediction") {
  const LearnedScoreModel net = small_net();
  const Vector x = vec({0.4, -0.2});
  const double t = 0.3;
  const Vector eps = net.predict_noise(PromptId{"pos"}, x, t);
  CHECK((net.score(PromptId{"pos"}, x, t) + eps / net.schedule().sigma(t)).norm() < 1e-12);
  CHECK(net.has_prompt(PromptId{"pos", "neg"}));
  CHECK(net.has_prompt(PromptId()));
  CHECK_FALSE(net.has_prompt(PromptId{"zebra"}));
}

TEST_CASE("network JSON round trip") {
  const LearnedScoreModel net = small_net();
  const LearnedScoreModel back = LearnedScoreModel::from_json(net.to_json());
  CHECK(back.parameters() == net.parameters());
  CHECK(back.vocabulary() == net.vocabulary());
  const Vector x = vec({1.0, 2.0});
  CHECK(back.score(PromptId{"neg"}, x, 0.6) == net.score(PromptId{"neg"}, x, 0.6));
}

TEST_CASE("denoising score matching reduces the loss") {
  TrainConfig cfg;
  cfg.steps = 400;
  cfg.batch = 64;
  cfg.log_every = 50;
  const World w = worlds::two_prompt();
  const LearnedScoreModel net = train_dsm(w, {PromptId{"pos"}, PromptId{"neg"}, PromptId()}, NoiseSchedule{}, cfg, 3);
  const auto& curve = net.log().loss_curve;
  REQUIRE(curve.size() >= 2);
  CHECK(curve.back() < curve.front());
  CHECK(net.parameters_finite());
  // Even briefly trained, the contrast points the right way at the origin.
  const Vector diff = net.score(PromptId{"pos"}, vec({0.0}), 0.3) - net.score(PromptId{"neg"}, vec({0.0}), 0.3);
  CHECK(diff[0] > 0.0);
}

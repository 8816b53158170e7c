#include "cguide/worlds.hpp"

namespace cguide::worlds {

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

GaussianMixture unit(Vector mean) { return GaussianMixture::single(GaussianComponent::isotropic(std::move(mean))); }

}  // namespace

World standard_normal(Eigen::Index dim) {
  if (dim < 1) throw ConfigError("standard_normal: dimension must be positive");
  World w(dim);
  w.add(PromptId{"base"}, unit(Vector::Zero(dim)), 1.0);
  return w;
}

World two_prompt(double mu) {
  World w(1);
  w.add(PromptId{"pos"}, unit(vec({mu})), 0.5);
  w.add(PromptId{"neg"}, unit(vec({-mu})), 0.5);
  return w;
}

World factorized() {
  constexpr double glasses = 0.3;
  World w(2);
  const auto leaf = [](double s, double g) { return GaussianComponent::isotropic(vec({s, g})); };
  w.add(PromptId{"cat", "glasses"}, GaussianMixture::single(leaf(2, 2)), 0.5 * glasses);
  w.add(PromptId{"cat", "noglasses"}, GaussianMixture::single(leaf(2, -2)), 0.5 * (1 - glasses));
  w.add(PromptId{"dog", "glasses"}, GaussianMixture::single(leaf(-2, 2)), 0.5 * glasses);
  w.add(PromptId{"dog", "noglasses"}, GaussianMixture::single(leaf(-2, -2)), 0.5 * (1 - glasses));
  w.add(PromptId{"cat"}, GaussianMixture({glasses, 1 - glasses}, {leaf(2, 2), leaf(2, -2)}));
  w.add(PromptId{"dog"}, GaussianMixture({glasses, 1 - glasses}, {leaf(-2, 2), leaf(-2, -2)}));
  return w;
}

World linear(double delta) {
  World w(2);
  w.add(PromptId{"scene"}, unit(vec({0.0, 1.0})), 1.0);
  w.add(PromptId{"scene", "warm"}, unit(vec({0.5 * delta, 1.0})));
  w.add(PromptId{"scene", "cool"}, unit(vec({-0.5 * delta, 1.0})));
  return w;
}

World expert(double offset) {
  World w(2);
  const auto c = [](double a, double b) { return GaussianComponent::isotropic(vec({a, b})); };
  w.add(PromptId{"face"}, GaussianMixture({0.5, 0.5}, {c(0, 2), c(0, -2)}), 0.5);
  w.add(PromptId{"photo", "glasses"}, GaussianMixture::single(c(offset, 2)), 0.25);
  w.add(PromptId{"photo", "noglasses"}, GaussianMixture::single(c(offset, -2)), 0.25);
  return w;
}

World random(Rng& rng, Eigen::Index dim) {
  World w(dim);
  for (const char* name : {"p", "n"}) {
    const int k = 1 + static_cast<int>(rng.uniform() * 3.0);
    std::vector<double> weights;
    std::vector<GaussianComponent> comps;
    for (int i = 0; i < k; ++i) {
      weights.push_back(0.2 + rng.uniform());
      const Vector mean = 2.0 * rng.normal_vector(dim);
      const Matrix a = Matrix::NullaryExpr(dim, dim, [&] { return 0.5 * rng.normal(); });
      comps.emplace_back(mean, Matrix(a * a.transpose() + (0.3 + rng.uniform()) * Matrix::Identity(dim, dim)));
    }
    w.add(PromptId{name}, GaussianMixture(std::move(weights), std::move(comps)), 0.1 + rng.uniform());
  }
  return w;
}

std::vector<std::string> names() { return {"standard_normal", "two_prompt", "factorized", "linear", "expert"}; }

World by_name(const std::string& name) {
  if (name == "two_prompt") return two_prompt();
  if (name == "factorized") return factorized();
  if (name == "linear") return linear();
  if (name == "expert") return expert();
  if (name == "standard_normal") return standard_normal(1);
  const std::string prefix = "standard_normal_";
  if (name.starts_with(prefix)) {
    try {
      return standard_normal(std::stoi(name.substr(prefix.size())));
    } catch (const std::logic_error&) {
    }
  }
  throw ConfigError("unknown built-in world '" + name + "'");
}

}  // namespace cguide::worlds

#include "cguide/world.hpp"

#include "cguide/classifier.hpp"
#include "cguide/rng.hpp"

#include <algorithm>
#include <sstream>

namespace cguide {

PromptId::PromptId(std::initializer_list<std::string> tokens) : PromptId(std::vector<std::string>(tokens)) {}

PromptId::PromptId(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const auto& t : tokens_) {
    if (t.empty()) throw ConfigError("empty token in prompt");
  }
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
}

PromptId PromptId::parse(const std::string& text) {
  if (text.empty() || text == "{}" || text == "null" || text == "\xE2\x88\x85") return PromptId();
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (c == '+' || c == ',' || c == ' ') {
      if (!cur.empty()) tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return PromptId(std::move(tokens));
}

std::string PromptId::str() const {
  if (tokens_.empty()) return "{}";
  std::string out;
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (i) out += '+';
    out += tokens_[i];
  }
  return out;
}

void World::add(const PromptId& prompt, GaussianMixture mixture, double prior) {
  if (prompt.is_empty()) throw ConfigError("the unconditional prompt is derived and cannot be registered");
  if (entries_.count(prompt)) throw ConfigError("prompt '" + prompt.str() + "' registered twice");
  if (!(prior >= 0.0) || !std::isfinite(prior)) throw ConfigError("prompt prior must be finite and >= 0");
  if (dim_ == 0) dim_ = mixture.dim();
  if (mixture.dim() != dim_) {
    throw ShapeError("prompt '" + prompt.str() + "' has dimension " + std::to_string(mixture.dim()) +
                     ", world has " + std::to_string(dim_));
  }
  entries_.emplace(prompt, PromptEntry{std::move(mixture), prior});
  rebuild_unconditional();
}

void World::rebuild_unconditional() {
  std::vector<double> weights;
  std::vector<GaussianComponent> comps;
  double total_prior = 0.0;
  for (const auto& [p, e] : entries_) total_prior += e.prior;
  if (!(total_prior > 0.0)) {
    unconditional_.reset();
    return;
  }
  for (const auto& [p, e] : entries_) {
    if (e.prior <= 0.0) continue;
    const auto& w = e.mixture.weights();
    for (size_t k = 0; k < w.size(); ++k) {
      weights.push_back(e.prior / total_prior * w[k]);
      comps.push_back(e.mixture.components()[k]);
    }
  }
  unconditional_ = PromptEntry{GaussianMixture(std::move(weights), std::move(comps)), 1.0};
}

bool World::has(const PromptId& prompt) const {
  return prompt.is_empty() ? unconditional_.has_value() : entries_.count(prompt) > 0;
}

const PromptEntry& World::entry(const PromptId& prompt) const {
  if (prompt.is_empty()) {
    if (!unconditional_) throw LookupError("world has no prompt with positive prior; unconditional undefined");
    return *unconditional_;
  }
  auto it = entries_.find(prompt);
  if (it == entries_.end()) throw LookupError("unregistered prompt '" + prompt.str() + "'");
  return it->second;
}

std::vector<PromptId> World::prompts() const {
  std::vector<PromptId> out;
  for (const auto& [p, e] : entries_) out.push_back(p);
  return out;
}

std::vector<PromptId> World::leaves() const {
  std::vector<PromptId> out;
  for (const auto& [p, e] : entries_) {
    if (e.prior > 0.0) out.push_back(p);
  }
  return out;
}

GaussianMixture marginal_params(const PromptId& prompt, double t, const World& world, const NoiseSchedule& sched) {
  const auto [a, s] = alpha_sigma(t, sched);
  return world.mixture(prompt).perturbed(a, s);
}

Vector score(const PromptId& prompt, const Vector& x, double t, const World& world, const NoiseSchedule& sched) {
  const auto [a, s] = alpha_sigma(t, sched);
  return world.mixture(prompt).score(x, a, s);
}

double log_density(const PromptId& prompt, const Vector& x, double t, const World& world,
                   const NoiseSchedule& sched) {
  const auto [a, s] = alpha_sigma(t, sched);
  return world.mixture(prompt).log_density(x, a, s);
}

Matrix rejection_sample_tilted(const World& world, const Contrast& contrast, size_t n, std::uint64_t seed,
                               const PromptId& base) {
  const GaussianMixture& base_mix = world.mixture(base);
  const GaussianMixture& pos = world.mixture(contrast.positive);
  const GaussianMixture& neg = world.mixture(contrast.negative);
  Rng rng(seed);
  Matrix out(static_cast<Eigen::Index>(n), world.dim());
  size_t accepted = 0;
  size_t trials = 0;
  constexpr size_t kMinTrials = 100000;
  while (accepted < n) {
    const Vector x = base_mix.sample(rng);
    ++trials;
    const auto logits = classifier_logits(pos.log_density(x), neg.log_density(x), contrast.gamma,
                                          contrast.prior_positive, contrast.prior_negative);
    if (std::log(rng.uniform()) < logits.log_pos) {
      out.row(static_cast<Eigen::Index>(accepted++)) = x.transpose();
    }
    if (trials >= kMinTrials && static_cast<double>(accepted) < 1e-4 * static_cast<double>(trials)) {
      std::ostringstream os;
      os << "rejection_sample_tilted: acceptance rate " << static_cast<double>(accepted) / trials << " after "
         << trials << " trials is below 1e-4";
      throw NumericError(os.str());
    }
  }
  return out;
}

}  // namespace cguide

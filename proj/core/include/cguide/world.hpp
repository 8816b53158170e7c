#pragma once

#include "cguide/mixture.hpp"
#include "cguide/schedule.hpp"
#include "cguide/types.hpp"

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cguide {

/// Symbolic prompt: a canonicalized (sorted, deduplicated) token set.
/// The empty set is the unconditional prompt.
class PromptId {
 public:
  PromptId() = default;
  PromptId(std::initializer_list<std::string> tokens);
  explicit PromptId(std::vector<std::string> tokens);

  static PromptId empty() { return PromptId(); }
  /// Parses "cat+glasses", "cat,glasses", or "" / "{}" for the empty prompt.
  static PromptId parse(const std::string& text);

  bool is_empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::string str() const;

  auto operator<=>(const PromptId&) const = default;

 private:
  std::vector<std::string> tokens_;
};

struct PromptEntry {
  GaussianMixture mixture;
  double prior = 0.0;
};

/// Prompt registry with closed-form conditionals. The empty prompt is always
/// derived: it is the prior-weighted mixture over registered prompts with
/// positive prior ("leaves").
class World {
 public:
  explicit World(Eigen::Index dim = 0) : dim_(dim) {}

  Eigen::Index dim() const { return dim_; }

  /// Registers a prompt. Throws ConfigError for the empty prompt, duplicate
  /// prompts or a negative prior, and ShapeError for a dimension mismatch.
  void add(const PromptId& prompt, GaussianMixture mixture, double prior = 0.0);
  /// Rebuilds the unconditional mixture. Called by add().
  void rebuild_unconditional();

  bool has(const PromptId& prompt) const;
  const PromptEntry& entry(const PromptId& prompt) const;
  const GaussianMixture& mixture(const PromptId& prompt) const { return entry(prompt).mixture; }
  double prior(const PromptId& prompt) const { return entry(prompt).prior; }

  /// Registered prompts, excluding the derived empty prompt.
  std::vector<PromptId> prompts() const;
  std::vector<PromptId> leaves() const;

 private:
  Eigen::Index dim_;
  std::map<PromptId, PromptEntry> entries_;
  std::optional<PromptEntry> unconditional_;
};

/// Exact perturbed mixture of a prompt at time t; weights unchanged.
GaussianMixture marginal_params(const PromptId& prompt, double t, const World& world, const NoiseSchedule& sched);

/// Exact conditional score grad_x log p_t(x | prompt).
Vector score(const PromptId& prompt, const Vector& x, double t, const World& world, const NoiseSchedule& sched);

/// Exact conditional log-density log p_t(x | prompt).
double log_density(const PromptId& prompt, const Vector& x, double t, const World& world,
                   const NoiseSchedule& sched);

/// Pair of contrasted prompts with the classifier temperature and priors.
struct Contrast {
  PromptId positive;
  PromptId negative;
  double gamma = 1.0;
  double prior_positive = 0.5;
  double prior_negative = 0.5;
};

/// Exact samples from p_0(x | base) * classifier_0(x) by rejection with
/// acceptance probability equal to the classifier value at t = 0.
/// Throws NumericError when the running acceptance rate drops below 1e-4.
Matrix rejection_sample_tilted(const World& world, const Contrast& contrast, size_t n, std::uint64_t seed,
                               const PromptId& base = PromptId::empty());

}  // namespace cguide

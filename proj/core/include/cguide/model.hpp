#pragma once

#include "cguide/schedule.hpp"
#include "cguide/types.hpp"
#include "cguide/world.hpp"

#include <memory>
#include <optional>

namespace cguide {

/// A prompt-conditioned score model: the "text-to-image model" role.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual const NoiseSchedule& schedule() const = 0;
  virtual bool has_prompt(const PromptId& prompt) const = 0;
  virtual Vector score(const PromptId& prompt, const Vector& x, double t) const = 0;
  /// Closed-form log p_t(x | prompt) when available.
  virtual std::optional<double> log_density(const PromptId& /*prompt*/, const Vector& /*x*/,
                                            double /*t*/) const {
    return std::nullopt;
  }

  /// Binds a prompt. The model must outlive the returned field.
  ScoreField field(const PromptId& prompt) const {
    return [this, prompt](const Vector& x, double t) { return score(prompt, x, t); };
  }
};

/// Exact scores and log-densities of an analytic World.
class AnalyticModel final : public ScoreModel {
 public:
  AnalyticModel(World world, NoiseSchedule sched) : world_(std::move(world)), sched_(sched) {}

  Eigen::Index dim() const override { return world_.dim(); }
  bool has_prompt(const PromptId& prompt) const override { return world_.has(prompt); }
  Vector score(const PromptId& prompt, const Vector& x, double t) const override {
    return cguide::score(prompt, x, t, world_, sched_);
  }
  std::optional<double> log_density(const PromptId& prompt, const Vector& x, double t) const override {
    return cguide::log_density(prompt, x, t, world_, sched_);
  }

  const World& world() const { return world_; }
  const NoiseSchedule& schedule() const override { return sched_; }

 private:
  World world_;
  NoiseSchedule sched_;
};

}  // namespace cguide

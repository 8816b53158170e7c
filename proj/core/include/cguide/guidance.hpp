#pragma once

#include "cguide/model.hpp"
#include "cguide/types.hpp"
#include "cguide/world.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace cguide {

/// Piecewise-constant function of time: values[0] below knots[0],
/// values[i] on [knots[i-1], knots[i]), values.back() from knots.back() on.
class StepSchedule {
 public:
  StepSchedule(double constant = 0.0);  // NOLINT: implicit from a number is intended
  StepSchedule(std::vector<double> knots, std::vector<double> values);

  double operator()(double t) const;
  bool is_constant() const { return knots_.empty(); }
  /// True when the schedule is identically zero.
  bool is_zero() const;

  nlohmann::json to_json() const;
  /// Accepts a number or {"knots": [...], "values": [...]}.
  static StepSchedule from_json(const nlohmann::json& j, const std::string& path);

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// How the contrastive coefficient is obtained.
struct LambdaSpec {
  enum class Mode { constant, exact };
  Mode mode = Mode::constant;
  StepSchedule value = 0.0;  // constant mode
  StepSchedule gamma = 1.0;  // exact mode temperature
  double prior_positive = 0.5;
  double prior_negative = 0.5;
  int ode_steps = 512;       // exact mode on models without closed-form densities

  static LambdaSpec constant(StepSchedule v) { return {Mode::constant, std::move(v)}; }
  static LambdaSpec exact(StepSchedule gamma, double prior_pos = 0.5, double prior_neg = 0.5) {
    LambdaSpec s;
    s.mode = Mode::exact;
    s.gamma = std::move(gamma);
    s.prior_positive = prior_pos;
    s.prior_negative = prior_neg;
    return s;
  }
};

/// tau s(x, t, y) - (tau - 1) s(x, t, {}), evaluated as
/// s(y) + (tau - 1) (s(y) - s({})) so that tau = 1 and y = {} reduce exactly.
Vector cfg_score(const ScoreModel& model, const PromptId& y, double tau, const Vector& x, double t);

/// guided(x, t) + lambda_t (s(x, t, y+) - s(x, t, y-)).
Vector contrastive_score(const ScoreField& guided, const ScoreModel& model, const PromptId& positive,
                         const PromptId& negative, const LambdaSpec& lambda, const Vector& x, double t);

/// guided(x, t) + tau (s(x, t, {}) - s(x, t, y-)).
Vector negative_score(const ScoreField& guided, const ScoreModel& model, const PromptId& negative, double tau,
                      const Vector& x, double t);

/// p+ q+^g / (p+ q+^g + p- q-^g) with q = p_t(x | y). Requires closed-form
/// log-densities; throws NumericError if both underflow.
double classifier_prob(const ScoreModel& model, const Contrast& contrast, const Vector& x, double t);

/// gamma p- q-^g / (p+ q+^g + p- q-^g) = gamma (1 - classifier_prob).
double lambda_exact(const ScoreModel& model, const Contrast& contrast, const Vector& x, double t);

/// Evaluates the coefficient of a contrastive term at (x, t).
double lambda_value(const ScoreModel& model, const PromptId& positive, const PromptId& negative,
                    const LambdaSpec& lambda, const Vector& x, double t);

/// Base field of a composed guidance.
struct GuidanceBase {
  enum class Kind {
    field,        // externally supplied field (e.g. a domain expert)
    conditional,  // s(x, t, prompt)
    cfg,          // cfg_score(prompt, tau)
  };
  Kind kind = Kind::conditional;
  PromptId prompt;
  StepSchedule tau = 1.0;
};

struct GuidanceTerm {
  enum class Kind {
    cfg,          // tau (s(y+) - s({}))
    contrastive,  // lambda (s(y+) - s(y-))
    negative,     // tau (s({}) - s(y-))
  };
  Kind kind = Kind::contrastive;
  PromptId positive;
  PromptId negative;
  StepSchedule tau = 0.0;
  LambdaSpec lambda;

  static GuidanceTerm cfg(PromptId y, StepSchedule tau);
  static GuidanceTerm contrastive(PromptId pos, PromptId neg, LambdaSpec lambda);
  static GuidanceTerm negation(PromptId neg, StepSchedule tau);
};

struct GuidanceSpec {
  GuidanceBase base;
  std::vector<GuidanceTerm> terms;

  nlohmann::json to_json() const;
  static GuidanceSpec from_json(const nlohmann::json& j, const std::string& path = "guidance");
};

/// Checks prompts against the model and that base kind "field" has a field.
/// Throws ConfigError.
void validate(const GuidanceSpec& spec, const ScoreModel& model, bool have_base_field);

/// Base field plus the sum of all terms. Terms whose coefficient is exactly
/// zero at t are skipped, so a zero schedule reproduces the base bit for bit.
/// The model (and base_field's captures) must outlive the returned field.
ScoreField compose(const GuidanceSpec& spec, const ScoreModel& model, ScoreField base_field = nullptr);

}  // namespace cguide

#include "cguide/guidance.hpp"

#include "cguide/classifier.hpp"
#include "cguide/density.hpp"

#include <algorithm>
#include <cmath>

namespace cguide {

StepSchedule::StepSchedule(double constant) : values_{constant} {
  if (!std::isfinite(constant)) throw ConfigError("schedule value must be finite");
}

StepSchedule::StepSchedule(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (values_.size() != knots_.size() + 1) throw ConfigError("schedule needs exactly one more value than knots");
  for (size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw ConfigError("schedule knots must be strictly increasing");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ConfigError("schedule value must be finite");
  }
}

double StepSchedule::operator()(double t) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  return values_[static_cast<size_t>(it - knots_.begin())];
}

bool StepSchedule::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

nlohmann::json StepSchedule::to_json() const {
  if (knots_.empty()) return values_.front();
  return {{"knots", knots_}, {"values", values_}};
}

StepSchedule StepSchedule::from_json(const nlohmann::json& j, const std::string& path) {
  try {
    if (j.is_number()) return StepSchedule(j.get<double>());
    if (j.is_object() && j.contains("knots") && j.contains("values")) {
      return StepSchedule(j.at("knots").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ": expected a number or {\"knots\": [...], \"values\": [...]}");
}

namespace {

void require_unconditional(const ScoreModel& model) {
  if (!model.has_prompt(PromptId::empty())) throw ConfigError("model has no unconditional (empty) prompt");
}

}  // namespace

Vector cfg_score(const ScoreModel& model, const PromptId& y, double tau, const Vector& x, double t) {
  require_unconditional(model);
  const Vector cond = model.score(y, x, t);
  if (tau == 1.0 || y.is_empty()) return cond;
  return cond + (tau - 1.0) * (cond - model.score(PromptId::empty(), x, t));
}

double classifier_prob(const ScoreModel& model, const Contrast& contrast, const Vector& x, double t) {
  const auto lp = model.log_density(contrast.positive, x, t);
  const auto ln = model.log_density(contrast.negative, x, t);
  if (!lp || !ln) throw ConfigError("classifier_prob needs closed-form log-densities");
  if (!std::isfinite(*lp) && !std::isfinite(*ln)) throw NumericError("classifier_prob: both densities underflow");
  return std::exp(
      classifier_logits(*lp, *ln, contrast.gamma, contrast.prior_positive, contrast.prior_negative).log_pos);
}

double lambda_exact(const ScoreModel& model, const Contrast& contrast, const Vector& x, double t) {
  if (contrast.gamma == 0.0) return 0.0;
  const auto lp = model.log_density(contrast.positive, x, t);
  const auto ln = model.log_density(contrast.negative, x, t);
  if (!lp || !ln) throw ConfigError("lambda_exact needs closed-form log-densities");
  if (!std::isfinite(*lp) && !std::isfinite(*ln)) throw NumericError("lambda_exact: both densities underflow");
  // Complement computed directly from its own logit to keep precision near c = 1.
  return contrast.gamma *
         std::exp(classifier_logits(*lp, *ln, contrast.gamma, contrast.prior_positive, contrast.prior_negative)
                      .log_neg);
}

double lambda_value(const ScoreModel& model, const PromptId& positive, const PromptId& negative,
                    const LambdaSpec& lambda, const Vector& x, double t) {
  if (lambda.mode == LambdaSpec::Mode::constant) return lambda.value(t);
  const Contrast c{positive, negative, lambda.gamma(t), lambda.prior_positive, lambda.prior_negative};
  if (c.gamma == 0.0) return 0.0;
  if (model.log_density(positive, x, t)) return lambda_exact(model, c, x, t);
  OdeDensityConfig cfg;
  cfg.n_steps = lambda.ode_steps;
  return lambda_via_ode(model, c, x, t, cfg);
}

Vector contrastive_score(const ScoreField& guided, const ScoreModel& model, const PromptId& positive,
                         const PromptId& negative, const LambdaSpec& lambda, const Vector& x, double t) {
  Vector out = guided(x, t);
  const double coeff = lambda_value(model, positive, negative, lambda, x, t);
  if (coeff != 0.0) out += coeff * (model.score(positive, x, t) - model.score(negative, x, t));
  return out;
}

Vector negative_score(const ScoreField& guided, const ScoreModel& model, const PromptId& negative, double tau,
                      const Vector& x, double t) {
  Vector out = guided(x, t);
  if (tau != 0.0) {
    require_unconditional(model);
    out += tau * (model.score(PromptId::empty(), x, t) - model.score(negative, x, t));
  }
  return out;
}

GuidanceTerm GuidanceTerm::cfg(PromptId y, StepSchedule tau) {
  GuidanceTerm g;
  g.kind = Kind::cfg;
  g.positive = std::move(y);
  g.tau = std::move(tau);
  return g;
}

GuidanceTerm GuidanceTerm::contrastive(PromptId pos, PromptId neg, LambdaSpec lambda) {
  GuidanceTerm g;
  g.kind = Kind::contrastive;
  g.positive = std::move(pos);
  g.negative = std::move(neg);
  g.lambda = std::move(lambda);
  return g;
}

GuidanceTerm GuidanceTerm::negation(PromptId neg, StepSchedule tau) {
  GuidanceTerm g;
  g.kind = Kind::negative;
  g.negative = std::move(neg);
  g.tau = std::move(tau);
  return g;
}

void validate(const GuidanceSpec& spec, const ScoreModel& model, bool have_base_field) {
  auto need = [&](const PromptId& p, const std::string& where) {
    if (!model.has_prompt(p)) throw ConfigError(where + ": prompt '" + p.str() + "' unknown to the model");
  };
  switch (spec.base.kind) {
    case GuidanceBase::Kind::field:
      if (!have_base_field) throw ConfigError("guidance.base: kind 'field' needs a supplied base field");
      break;
    case GuidanceBase::Kind::conditional: need(spec.base.prompt, "guidance.base"); break;
    case GuidanceBase::Kind::cfg:
      need(spec.base.prompt, "guidance.base");
      need(PromptId::empty(), "guidance.base");
      break;
  }
  for (size_t i = 0; i < spec.terms.size(); ++i) {
    const auto& term = spec.terms[i];
    const std::string where = "guidance.terms[" + std::to_string(i) + "]";
    switch (term.kind) {
      case GuidanceTerm::Kind::cfg:
        need(term.positive, where);
        need(PromptId::empty(), where);
        break;
      case GuidanceTerm::Kind::contrastive:
        need(term.positive, where);
        need(term.negative, where);
        if (term.lambda.mode == LambdaSpec::Mode::exact &&
            (!(term.lambda.prior_positive > 0.0) || !(term.lambda.prior_negative > 0.0))) {
          throw ConfigError(where + ".lambda: priors must be positive");
        }
        break;
      case GuidanceTerm::Kind::negative:
        need(term.negative, where);
        need(PromptId::empty(), where);
        break;
    }
  }
}

ScoreField compose(const GuidanceSpec& spec, const ScoreModel& model, ScoreField base_field) {
  validate(spec, model, static_cast<bool>(base_field));
  ScoreField base;
  switch (spec.base.kind) {
    case GuidanceBase::Kind::field: base = std::move(base_field); break;
    case GuidanceBase::Kind::conditional: base = model.field(spec.base.prompt); break;
    case GuidanceBase::Kind::cfg: {
      const PromptId y = spec.base.prompt;
      const StepSchedule tau = spec.base.tau;
      base = [&model, y, tau](const Vector& x, double t) { return cfg_score(model, y, tau(t), x, t); };
      break;
    }
  }
  if (spec.terms.empty()) return base;
  const PromptId empty = PromptId::empty();
  return [&model, base, terms = spec.terms, empty](const Vector& x, double t) {
    Vector out = base(x, t);
    for (const auto& term : terms) {
      switch (term.kind) {
        case GuidanceTerm::Kind::cfg: {
          const double tau = term.tau(t);
          if (tau != 0.0) out += tau * (model.score(term.positive, x, t) - model.score(empty, x, t));
          break;
        }
        case GuidanceTerm::Kind::contrastive: {
          const double lambda = lambda_value(model, term.positive, term.negative, term.lambda, x, t);
          if (lambda != 0.0) out += lambda * (model.score(term.positive, x, t) - model.score(term.negative, x, t));
          break;
        }
        case GuidanceTerm::Kind::negative: {
          const double tau = term.tau(t);
          if (tau != 0.0) out += tau * (model.score(empty, x, t) - model.score(term.negative, x, t));
          break;
        }
      }
    }
    return out;
  };
}

namespace {

const char* base_kind_name(GuidanceBase::Kind k) {
  switch (k) {
    case GuidanceBase::Kind::field: return "field";
    case GuidanceBase::Kind::conditional: return "conditional";
    case GuidanceBase::Kind::cfg: return "cfg";
  }
  return "?";
}

const char* term_kind_name(GuidanceTerm::Kind k) {
  switch (k) {
    case GuidanceTerm::Kind::cfg: return "cfg";
    case GuidanceTerm::Kind::contrastive: return "contrastive";
    case GuidanceTerm::Kind::negative: return "negative";
  }
  return "?";
}

PromptId prompt_of(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing required field");
  if (!j.at(key).is_string()) throw ConfigError(path + "." + key + ": expected a prompt string");
  return PromptId::parse(j.at(key).get<std::string>());
}

}  // namespace

nlohmann::json GuidanceSpec::to_json() const {
  nlohmann::json b{{"kind", base_kind_name(base.kind)}};
  if (base.kind != GuidanceBase::Kind::field) b["prompt"] = base.prompt.str();
  if (base.kind == GuidanceBase::Kind::cfg) b["tau"] = base.tau.to_json();
  nlohmann::json ts = nlohmann::json::array();
  for (const auto& term : terms) {
    nlohmann::json tj{{"kind", term_kind_name(term.kind)}};
    switch (term.kind) {
      case GuidanceTerm::Kind::cfg:
        tj["positive"] = term.positive.str();
        tj["tau"] = term.tau.to_json();
        break;
      case GuidanceTerm::Kind::contrastive:
        tj["positive"] = term.positive.str();
        tj["negative"] = term.negative.str();
        if (term.lambda.mode == LambdaSpec::Mode::constant) {
          tj["lambda"] = term.lambda.value.to_json();
        } else {
          tj["lambda"] = {{"mode", "exact"},
                          {"gamma", term.lambda.gamma.to_json()},
                          {"prior_positive", term.lambda.prior_positive},
                          {"prior_negative", term.lambda.prior_negative},
                          {"ode_steps", term.lambda.ode_steps}};
        }
        break;
      case GuidanceTerm::Kind::negative:
        tj["negative"] = term.negative.str();
        tj["tau"] = term.tau.to_json();
        break;
    }
    ts.push_back(tj);
  }
  return {{"base", b}, {"terms", ts}};
}

GuidanceSpec GuidanceSpec::from_json(const nlohmann::json& j, const std::string& path) {
  GuidanceSpec spec;
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  if (j.contains("base")) {
    const auto& b = j.at("base");
    const std::string bp = path + ".base";
    const std::string kind = b.value("kind", "conditional");
    if (kind == "field") {
      spec.base.kind = GuidanceBase::Kind::field;
    } else if (kind == "conditional") {
      spec.base.kind = GuidanceBase::Kind::conditional;
      spec.base.prompt = prompt_of(b, "prompt", bp);
    } else if (kind == "cfg") {
      spec.base.kind = GuidanceBase::Kind::cfg;
      spec.base.prompt = prompt_of(b, "prompt", bp);
      spec.base.tau = b.contains("tau") ? StepSchedule::from_json(b.at("tau"), bp + ".tau") : StepSchedule(7.5);
    } else {
      throw ConfigError(bp + ".kind: unknown base kind '" + kind + "'");
    }
  }
  if (j.contains("terms")) {
    const auto& ts = j.at("terms");
    if (!ts.is_array()) throw ConfigError(path + ".terms: expected an array");
    for (size_t i = 0; i < ts.size(); ++i) {
      const auto& tj = ts[i];
      const std::string tp = path + ".terms[" + std::to_string(i) + "]";
      const std::string kind = tj.value("kind", "");
      if (kind == "cfg") {
        spec.terms.push_back(GuidanceTerm::cfg(prompt_of(tj, "positive", tp),
                                               StepSchedule::from_json(tj.value("tau", nlohmann::json(1.0)), tp + ".tau")));
      } else if (kind == "negative") {
        spec.terms.push_back(GuidanceTerm::negation(
            prompt_of(tj, "negative", tp), StepSchedule::from_json(tj.value("tau", nlohmann::json(1.0)), tp + ".tau")));
      } else if (kind == "contrastive") {
        LambdaSpec lambda;
        const nlohmann::json lj = tj.value("lambda", nlohmann::json(0.0));
        if (lj.is_object() && lj.value("mode", "constant") == "exact") {
          lambda = LambdaSpec::exact(StepSchedule::from_json(lj.value("gamma", nlohmann::json(1.0)), tp + ".lambda.gamma"),
                                     lj.value("prior_positive", 0.5), lj.value("prior_negative", 0.5));
          lambda.ode_steps = lj.value("ode_steps", 512);
        } else if (lj.is_object() && lj.contains("value")) {
          lambda = LambdaSpec::constant(StepSchedule::from_json(lj.at("value"), tp + ".lambda.value"));
        } else {
          lambda = LambdaSpec::constant(StepSchedule::from_json(lj, tp + ".lambda"));
        }
        spec.terms.push_back(
            GuidanceTerm::contrastive(prompt_of(tj, "positive", tp), prompt_of(tj, "negative", tp), lambda));
      } else {
        throw ConfigError(tp + ".kind: expected cfg|contrastive|negative");
      }
    }
  }
  return spec;
}

}  // namespace cguide

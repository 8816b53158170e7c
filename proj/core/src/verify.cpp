#include "cguide/verify.hpp"

#include "cguide/analysis.hpp"
#include "cguide/classifier.hpp"
#include "cguide/density.hpp"
#include "cguide/editing.hpp"
#include "cguide/guidance.hpp"
#include "cguide/parallel.hpp"
#include "cguide/pipeline.hpp"
#include "cguide/rng.hpp"
#include "cguide/worlds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace cguide {

nlohmann::json CriterionResult::to_json() const {
  return {{"id", id},           {"name", name},     {"passed", passed}, {"seconds", seconds},
          {"budget_seconds", budget_seconds}, {"detail", detail}, {"metrics", metrics}};
}

nlohmann::json VerifyConfig::to_json() const {
  return {{"seed", seed},
          {"check_runtime", check_runtime},
          {"train",
           {{"steps", train.steps},
            {"batch", train.batch},
            {"learning_rate", train.learning_rate},
            {"final_lr_fraction", train.final_lr_fraction},
            {"ema_decay", train.ema_decay},
            {"t_min", train.t_min}}}};
}

VerifyConfig VerifyConfig::from_json(const nlohmann::json& j, const std::string& path) {
  VerifyConfig c;
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  try {
    c.seed = j.value("seed", c.seed);
    c.check_runtime = j.value("check_runtime", c.check_runtime);
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.steps = t.value("steps", c.train.steps);
      c.train.batch = t.value("batch", c.train.batch);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.final_lr_fraction = t.value("final_lr_fraction", c.train.final_lr_fraction);
      c.train.ema_decay = t.value("ema_decay", c.train.ema_decay);
      c.train.t_min = t.value("t_min", c.train.t_min);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (c.train.steps < 1 || c.train.batch < 1) throw ConfigError(path + ".train: steps and batch must be positive");
  return c;
}

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Stamps timing and folds the runtime bound into the verdict.
CriterionResult finish(CriterionResult r, const Timer& timer, const VerifyConfig& cfg) {
  r.seconds = timer.seconds();
  if (cfg.check_runtime && r.budget_seconds > 0.0 && r.seconds >= r.budget_seconds) {
    r.passed = false;
    r.detail += fmt("; runtime %.1f s exceeds %.0f s", r.seconds, r.budget_seconds);
  }
  return r;
}

// A point drawn from p_t(prompt), so densities stay well away from underflow.
Vector draw_perturbed(const World& w, const PromptId& prompt, double t, const NoiseSchedule& sched, Rng& rng) {
  const AlphaSigma as = alpha_sigma(t, sched);
  const Vector x0 = w.mixture(prompt).sample(rng);
  return as.alpha * x0 + as.sigma * rng.normal_vector(w.dim());
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-3 * (1.0 + std::abs(x[i]));
    Vector e = Vector::Zero(x.size());
    e[i] = h;
    g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h);
  }
  return g;
}

}  // namespace

CriterionResult check_derivation_identity(const VerifyConfig& cfg) {
  Timer timer;
  CriterionResult r{1, "derivation identity", false, 0, 10, "", {}};
  const NoiseSchedule sched;
  Rng rng(stream_seed(cfg.seed, 1));
  double worst = 0.0;
  constexpr int kConfigs = 200;
  for (int k = 0; k < kConfigs; ++k) {
    const Eigen::Index d = 1 + k % 3;
    const AnalyticModel model(worlds::random(rng, d), sched);
    const double t = 0.02 + 0.98 * rng.uniform();
    const Contrast c{PromptId{"p"}, PromptId{"n"}, 3.0 * rng.uniform(), 0.05 + 0.9 * rng.uniform(),
                     0.05 + 0.9 * rng.uniform()};
    const Vector x = draw_perturbed(model.world(), PromptId::empty(), t, sched, rng);
    const auto log_target = [&](const Vector& y) {
      const ClassifierLogits l = classifier_logits(*model.log_density(c.positive, y, t),
                                                   *model.log_density(c.negative, y, t), c.gamma,
                                                   c.prior_positive, c.prior_negative);
      return *model.log_density(PromptId::empty(), y, t) + l.log_pos;
    };
    const Vector fd = fd_gradient(log_target, x);
    const Vector analytic = model.score(PromptId::empty(), x, t) +
                            lambda_exact(model, c, x, t) * (model.score(c.positive, x, t) - model.score(c.negative, x, t));
    const double rel = (fd - analytic).norm() / std::max(analytic.norm(), 1e-6);
    worst = std::max(worst, rel);
  }
  r.passed = worst <= 1e-4;
  r.metrics = {{"configs", kConfigs}, {"max_relative_error", worst}, {"tolerance", 1e-4}};
  r.detail = fmt("max rel err %.2e over %d configs (tol 1e-4)", worst, kConfigs);
  return finish(r, timer, cfg);
}

CriterionResult check_density_ode(const VerifyConfig& cfg) {
  Timer timer;
  CriterionResult r{2, "density ODE", false, 0, 30, "", {}};
  const NoiseSchedule sched;
  Rng rng(stream_seed(cfg.seed, 2));
  struct Point {
    std::shared_ptr<AnalyticModel> model;
    Vector x;
    double t;
    double exact;
  };
  std::vector<Point> pts;
  for (int w = 0; w < 10; ++w) {
    auto model = std::make_shared<AnalyticModel>(worlds::random(rng, 1 + w % 2), sched);
    for (int i = 0; i < 10; ++i) {
      const double t = 0.9 * rng.uniform();
      Vector x = draw_perturbed(model->world(), PromptId{"p"}, t, sched, rng);
      const double exact = *model->log_density(PromptId{"p"}, x, t);
      pts.push_back({model, std::move(x), t, exact});
    }
  }
  const auto errors = [&](int steps, size_t count) {
    std::vector<double> e(count);
    OdeDensityConfig oc;
    oc.n_steps = steps;
    oc.exact_terminal = true;
    parallel_for(count, [&](size_t i) {
      e[i] = log_density_ode(*pts[i].model, PromptId{"p"}, pts[i].x, pts[i].t, oc).log_density - pts[i].exact;
    });
    return e;
  };
  double max_err = 0.0;
  for (double e : errors(512, pts.size())) max_err = std::max(max_err, std::abs(e));

  // Order from the mean absolute error at 32 and 128 steps on the first 20 points.
  const auto mean_abs = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s / static_cast<double>(v.size());
  };
  const double e32 = mean_abs(errors(32, 20));
  const double e64 = mean_abs(errors(64, 20));
  const double e128 = mean_abs(errors(128, 20));
  const double order = std::log2(e32 / e128) / 2.0;
  r.passed = max_err <= 1e-3 && order >= 1.75;
  r.metrics = {{"points", pts.size()}, {"max_abs_error_512", max_err}, {"mean_abs_error_32", e32},
               {"mean_abs_error_64", e64}, {"mean_abs_error_128", e128}, {"observed_order", order}};
  r.detail = fmt("max |err| %.2e at 512 steps (tol 1e-3); order %.2f (min 1.75)", max_err, order);
  return finish(r, timer, cfg);
}

CriterionResult check_lambda_ode(const VerifyConfig& cfg) {
  Timer timer;
  CriterionResult r{3, "lambda via ODE", false, 0, 60, "", {}};
  const NoiseSchedule sched;
  Rng rng(stream_seed(cfg.seed, 3));
  struct Point {
    std::shared_ptr<AnalyticModel> model;
    Contrast c;
    Vector x;
    double t;
  };
  std::vector<Point> pts;
  for (int k = 0; k < 50; ++k) {
    auto model = std::make_shared<AnalyticModel>(worlds::random(rng, 1 + k % 2), sched);
    const double t = 0.9 * rng.uniform();
    const Contrast c{PromptId{"p"}, PromptId{"n"}, 0.25 + 2.0 * rng.uniform(), 0.05 + 0.9 * rng.uniform(),
                     0.05 + 0.9 * rng.uniform()};
    Vector x = draw_perturbed(model->world(), PromptId::empty(), t, sched, rng);
    pts.push_back({model, c, std::move(x), t});
  }
  std::vector<double> gaps(pts.size());
  OdeDensityConfig oc;
  oc.exact_terminal = true;
  parallel_for(pts.size(), [&](size_t i) {
    const auto& p = pts[i];
    gaps[i] = std::abs(lambda_via_ode(*p.model, p.c, p.x, p.t, oc) - lambda_exact(*p.model, p.c, p.x, p.t));
  });
  const double worst = *std::max_element(gaps.begin(), gaps.end());
  r.passed = worst <= 2e-3;
  r.metrics = {{"points", pts.size()}, {"max_abs_gap", worst}, {"tolerance", 2e-3}};
  r.detail = fmt("max |lambda_ode - lambda_exact| %.2e over %zu points (tol 2e-3)", worst, pts.size());
  return finish(r, timer, cfg);
}

CriterionResult check_reductions(const VerifyConfig& cfg) {
  Timer timer;
  CriterionResult r{4, "reductions", false, 0, 0, "", {}};
  const NoiseSchedule sched;
  const AnalyticModel model(worlds::factorized(), sched);
  const PromptId cat{"cat"}, cat_glasses{"cat", "glasses"}, cat_plain{"cat", "noglasses"};
  const TimeGrid grid = TimeGrid::uniform(200);

  GuidanceSpec base;
  base.base = {GuidanceBase::Kind::cfg, cat, 3.0};
  GuidanceSpec zero = base;
  zero.terms.push_back(GuidanceTerm::contrastive(cat_glasses, cat_plain, LambdaSpec::constant(0.0)));
  const ScoreField f_base = compose(base, model);
  const ScoreField f_zero = compose(zero, model);

  bool lambda_zero = true;
  for (SamplerKind kind : {SamplerKind::em_sde, SamplerKind::pf_ode, SamplerKind::ddim}) {
    const SamplerConfig sc{kind, 0.1};
    for (std::uint64_t s = 0; s < 20; ++s) {
      const std::uint64_t seed = stream_seed(cfg.seed, 400 + s);
      lambda_zero &= sample(f_base, grid, sched, sc, 2, seed).endpoint() ==
                     sample(f_zero, grid, sched, sc, 2, seed).endpoint();
    }
  }

  Rng rng(stream_seed(cfg.seed, 4));
  bool same_prompt = true, cfg_equiv = true, gamma_zero = true;
  for (int k = 0; k < 200; ++k) {
    const double t = kTimeFloor + (1.0 - kTimeFloor) * rng.uniform();
    const Vector x = 3.0 * rng.normal_vector(2);
    const double lam = std::ldexp(std::floor(64.0 * 8.0 * rng.uniform()), -6);  // dyadic: (1 + lam) - 1 == lam
    const Vector g = f_base(x, t);
    same_prompt &= contrastive_score(f_base, model, cat_glasses, cat_glasses, LambdaSpec::constant(lam), x, t) == g;
    GuidanceSpec eq;
    eq.base = {GuidanceBase::Kind::conditional, cat_glasses, 1.0};
    eq.terms.push_back(GuidanceTerm::contrastive(cat_glasses, PromptId::empty(), LambdaSpec::constant(lam)));
    cfg_equiv &= compose(eq, model)(x, t) == cfg_score(model, cat_glasses, 1.0 + lam, x, t);
    const Contrast c{cat_glasses, cat_plain, 0.0, 0.5, 0.5};
    gamma_zero &= lambda_exact(model, c, x, t) == 0.0;
  }
  // Endpoint-level CFG identity.
  {
    GuidanceSpec eq;
    eq.base = {GuidanceBase::Kind::conditional, cat_glasses, 1.0};
    eq.terms.push_back(GuidanceTerm::contrastive(cat_glasses, PromptId::empty(), LambdaSpec::constant(2.5)));
    GuidanceSpec cf;
    cf.base = {GuidanceBase::Kind::cfg, cat_glasses, 3.5};
    const std::uint64_t seed = stream_seed(cfg.seed, 450);
    cfg_equiv &= sample(compose(eq, model), grid, sched, {}, 2, seed).endpoint() ==
                 sample(compose(cf, model), grid, sched, {}, 2, seed).endpoint();
  }
  r.passed = lambda_zero && same_prompt && cfg_equiv && gamma_zero;
  r.metrics = {{"lambda_zero_bit_identical", lambda_zero},
               {"same_prompt_term_zero", same_prompt},
               {"cfg_equivalence_exact", cfg_equiv},
               {"gamma_zero_lambda_zero", gamma_zero}};
  r.detail = fmt("lambda=0 identical: %s; y+=y- zero: %s; CFG(1+lambda) exact: %s; gamma=0: %s",
                 lambda_zero ? "yes" : "no", same_prompt ? "yes" : "no", cfg_equiv ? "yes" : "no",
                 gamma_zero ? "yes" : "no");
  return finish(r, timer, cfg);
}

CriterionResult check_disentanglement(const VerifyConfig& cfg) {
  Timer timer;
  CriterionResult r{5, "disentanglement ordering", false, 0, 60, "", {}};
  const NoiseSchedule sched;
  const AnalyticModel model(worlds::factorized(), sched);
  const PromptId cat{"cat"}, cat_glasses{"cat", "glasses"};
  constexpr double kStrength = 2.0;
  constexpr size_t kPairs = 1000;

  GuidanceSpec base;
  base.base = {GuidanceBase::Kind::conditional, cat, 1.0};
  GuidanceSpec cfg_arm = base;
  cfg_arm.terms.push_back(GuidanceTerm::cfg(cat_glasses, kStrength));
  GuidanceSpec con_arm = base;
  con_arm.terms.push_back(GuidanceTerm::contrastive(cat_glasses, cat, LambdaSpec::constant(kStrength)));

  const SamplingSetup setup{TimeGrid::uniform(500), sched, {}, 2};
  const std::uint64_t seed = stream_seed(cfg.seed, 5);
  const ScoreField fb = compose(base, model);
  const DisplacementStats dc = paired_displacement(fb, compose(con_arm, model), kPairs, setup, seed);
  const DisplacementStats dg = paired_displacement(fb, compose(cfg_arm, model), kPairs, setup, seed);

  const bool l2_order = dc.mean_l2 < dg.mean_l2;
  const bool off_concept = dc.mean_abs[0] <= 1e-2 * dc.mean_abs[1];
  const bool cfg_larger = dg.mean_abs[0] > dc.mean_abs[0];
  r.passed = l2_order && off_concept && cfg_larger;
  r.metrics = {{"pairs", kPairs},
               {"contrastive_mean_l2", dc.mean_l2},
               {"cfg_mean_l2", dg.mean_l2},
               {"contrastive_mean_abs", {dc.mean_abs[0], dc.mean_abs[1]}},
               {"cfg_mean_abs", {dg.mean_abs[0], dg.mean_abs[1]}}};
  r.detail = fmt("mean L2 contrastive %.4f < CFG %.4f; off-concept %.2e vs concept %.3f (CFG off-concept %.3f)",
                 dc.mean_l2, dg.mean_l2, dc.mean_abs[0], dc.mean_abs[1], dg.mean_abs[0]);
  return finish(r, timer, cfg);
}

CriterionResult check_rig_sweep(const VerifyConfig& cfg) {
  Timer timer;
  CriterionResult r{6, "rig sweep", false, 0, 60, "", {}};
  const NoiseSchedule sched;
  constexpr double kDelta = 1.0;
  const AnalyticModel model(worlds::linear(kDelta), sched);
  const PromptId scene{"scene"}, warm{"scene", "warm"}, cool{"scene", "cool"};
  const std::vector<double> lambdas{-8, -4, 0, 4, 8};
  constexpr size_t kN = 4000;
  const SamplingSetup setup{TimeGrid::uniform(1000), sched, {}, 2};

  const auto field_for = [&](double lam) {
    GuidanceSpec s;
    s.base = {GuidanceBase::Kind::conditional, scene, 1.0};
    s.terms.push_back(GuidanceTerm::contrastive(warm, cool, LambdaSpec::constant(lam)));
    return compose(s, model);
  };
  const auto sweep = rig_sweep(field_for, lambdas, kN, setup, stream_seed(cfg.seed, 6));

  // Unit-variance Gaussian data with mean c: the exact-score reverse SDE from
  // N(0, I) has endpoint mean alpha_e c - alpha_T^2 c / alpha_e.
  const double ae = sched.alpha(setup.grid.end());
  const double aT = sched.alpha(setup.grid.start());
  bool monotone = true, matches = true;
  double worst_z = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (size_t k = 0; k < sweep.size(); ++k) {
    const double c = lambdas[k] * kDelta;
    const double oracle = ae * c - aT * aT * c / ae;
    const double z = std::abs(sweep[k].mean[0] - oracle) / sweep[k].se[0];
    worst_z = std::max(worst_z, z);
    matches &= z <= 3.0;
    if (k > 0) monotone &= sweep[k].mean[0] > sweep[k - 1].mean[0];
    rows.push_back({{"lambda", lambdas[k]}, {"mean", {sweep[k].mean[0], sweep[k].mean[1]}},
                    {"se", {sweep[k].se[0], sweep[k].se[1]}}, {"oracle", oracle}});
  }
  double gap = 0.0, se_max = 0.0;
  for (const auto& a : sweep) {
    se_max = std::max(se_max, a.se[1]);
    for (const auto& b : sweep) gap = std::max(gap, std::abs(a.mean[1] - b.mean[1]));
  }
  const bool invariant = gap <= 3.0 * se_max;
  r.passed = monotone && matches && invariant;
  r.metrics = {{"n_per_lambda", kN}, {"rows", rows}, {"max_z", worst_z}, {"off_concept_gap", gap}};
  r.detail = fmt("monotone: %s; max |mean - oracle| = %.2f SE (max 3); off-concept gap %.2e (3 SE = %.2e)",
                 monotone ? "yes" : "no", worst_z, gap, 3.0 * se_max);
  return finish(r, timer, cfg);
}

namespace {

struct TiltedDistances {
  double unguided;
  double guided;
};

// Energy distances to the rejection-sampled tilted target (gamma = 1, equal
// priors) of unguided and contrastive-guided samples on the two-prompt world.
TiltedDistances tilted_distances(double mu, const LambdaSpec& lambda, size_t n, std::uint64_t seed) {
  const NoiseSchedule sched;
  const AnalyticModel model(worlds::two_prompt(mu), sched);
  const PromptId pos{"pos"}, neg{"neg"};
  const Matrix target = rejection_sample_tilted(model.world(), {pos, neg, 1.0, 0.5, 0.5}, n, stream_seed(seed, 0));

  GuidanceSpec plain;
  plain.base = {GuidanceBase::Kind::conditional, PromptId::empty(), 1.0};
  GuidanceSpec guided = plain;
  guided.terms.push_back(GuidanceTerm::contrastive(pos, neg, lambda));
  const TimeGrid grid = TimeGrid::uniform(1000);
  const Matrix a = sample_endpoints(compose(plain, model), grid, sched, {}, 1, n, stream_seed(seed, 1));
  const Matrix b = sample_endpoints(compose(guided, model), grid, sched, {}, 1, n, stream_seed(seed, 1));
  return {energy_distance(a, target), energy_distance(b, target)};
}

}  // namespace

CriterionResult check_tilted_direction(const VerifyConfig& cfg) {
  Timer timer;
  CriterionResult r{7, "tilted-target direction", false, 0, 0, "", {}};
  constexpr size_t kN = 10000;
  const std::uint64_t seed = stream_seed(cfg.seed, 7);
  const TiltedDistances main = tilted_distances(2.0, LambdaSpec::constant(1.0), kN, seed);
  r.passed = main.guided < main.unguided;

  // Diagnostics only: the same comparison at other separations, and with the
  // state-dependent coefficient gamma (1 - c) instead of the constant.
  nlohmann::json sweep = nlohmann::json::array();
  for (double mu : {0.25, 0.5, 1.0}) {
    const TiltedDistances d = tilted_distances(mu, LambdaSpec::constant(1.0), kN, seed);
    sweep.push_back({{"mu", mu}, {"unguided", d.unguided}, {"guided", d.guided}});
  }
  const TiltedDistances exact = tilted_distances(2.0, LambdaSpec::exact(1.0), kN, seed);
  r.metrics = {{"n", kN},
               {"mu", 2.0},
               {"energy_distance_guided", main.guided},
               {"energy_distance_unguided", main.unguided},
               {"separation_sweep", sweep},
               {"exact_lambda_guided", exact.guided}};
  r.detail = fmt("mu=2, lambda=1: ED(guided, target) %.4f vs ED(unguided, target) %.4f; "
                 "exact-lambda guided %.4f",
                 main.guided, main.unguided, exact.guided);
  return finish(r, timer, cfg);
}

CriterionResult check_editing(const VerifyConfig& cfg) {
  Timer timer;
  CriterionResult r{8, "editing", false, 0, 300, "", {}};
  const NoiseSchedule sched;
  const AnalyticModel model(worlds::two_prompt(), sched);
  const PromptId source{"neg"}, target{"pos"};
  const GaussianMixture& src = model.world().mixture(source);
  Rng rng(stream_seed(cfg.seed, 8));

  EditTask proto;
  proto.source = source;
  proto.target = target;

  // Decode(encode(x0)) under the source field.
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    EditTask task = proto;
    task.x0 = src.sample(rng);
    task.t_e = 0.15 + 0.35 * rng.uniform();
    const TimeGrid grid = task.grid(sched);
    const CycleEncoding enc = cycle_encode(model, task.x0, source, grid, task.sampler.eta, stream_seed(cfg.seed, 800 + k));
    GuidanceSpec src_spec;
    src_spec.base = {GuidanceBase::Kind::conditional, source, 1.0};
    const Vector back = cycle_decode(model, enc.x_te, enc.record, src_spec, grid, task.sampler.eta);
    worst = std::max(worst, (back - task.x0).cwiseAbs().maxCoeff());
  }
  const bool identity = worst <= 1e-6;

  // lambda = 6 vs lambda = 0 with the same encoding noise.
  constexpr int kPaired = 200;
  int wins = 0;
  for (int k = 0; k < kPaired; ++k) {
    EditTask task = proto;
    task.x0 = src.sample(rng);
    const std::uint64_t seed = stream_seed(cfg.seed, 1000 + k);
    const Vector e0 = cycle_edit(task, model, seed);
    task.lambda = kDefaultCycleLambda;
    const Vector e6 = cycle_edit(task, model, seed);
    wins += directional_selector(model, source, target, task.x0, e6) >
            directional_selector(model, source, target, task.x0, e0);
  }
  const double win_rate = wins / static_cast<double>(kPaired);

  // Reduced grid with the contrastive term vs the full grid without it.
  constexpr int kSearch = 50;
  int matched = 0;
  for (int k = 0; k < kSearch; ++k) {
    EditTask task = proto;
    task.x0 = src.sample(rng);
    const std::uint64_t seed = stream_seed(cfg.seed, 2000 + k);
    const SearchReport full = hyperparameter_search(EditMethod::cycle, task, model, SearchGrid::full(), seed);
    task.lambda = kDefaultCycleLambda;
    const SearchReport reduced = hyperparameter_search(EditMethod::cycle, task, model, SearchGrid::reduced(), seed);
    matched += reduced.best_selector >= full.best_selector;
  }
  const double match_rate = matched / static_cast<double>(kSearch);
  r.passed = identity && win_rate >= 0.9 && match_rate >= 0.5;
  r.metrics = {{"identity_max_error", worst}, {"paired_tasks", kPaired}, {"lambda6_win_rate", win_rate},
               {"search_tasks", kSearch}, {"reduced_grid_match_rate", match_rate}};
  r.detail = fmt("cycle identity %.1e (tol 1e-6); lambda=6 wins %.1f%% (min 90%%); reduced grid matches %.0f%% (min 50%%)",
                 worst, 100 * win_rate, 100 * match_rate);
  return finish(r, timer, cfg);
}

CriterionResult check_learned_models(const VerifyConfig& cfg) {
  Timer timer;
  CriterionResult r{9, "learned models and expert orderings", false, 0, 600, "", {}};
  const NoiseSchedule sched;
  const World world = worlds::expert();
  ExpertConfig ec;
  ec.seed = stream_seed(cfg.seed, 9);

  const AnalyticModel analytic(world, sched);
  const ExpertReport stand_in = run_expert_guidance(analytic, analytic.field(ec.domain), world, ec);
  const bool analytic_ok = stand_in.contrastive_wins();

  const LearnedExpertReport learned = run_learned_expert(world, ec, cfg.train, stream_seed(cfg.seed, 90));
  const bool rms_ok = learned.max_rms() <= 0.1;
  const bool learned_ok = learned.report.contrastive_wins();
  r.passed = analytic_ok && rms_ok && learned_ok;
  r.metrics = {{"analytic", stand_in.to_json()}, {"learned", learned.to_json()}};
  r.detail = fmt("analytic ordering: %s; max score RMS %.3f (max 0.1); learned ordering: %s",
                 analytic_ok ? "yes" : "no", learned.max_rms(), learned_ok ? "yes" : "no");
  return finish(r, timer, cfg);
}

const std::vector<CriterionEntry>& criteria() {
  static const std::vector<CriterionEntry> list{
      {1, "derivation identity", check_derivation_identity},
      {2, "density ODE", check_density_ode},
      {3, "lambda via ODE", check_lambda_ode},
      {4, "reductions", check_reductions},
      {5, "disentanglement ordering", check_disentanglement},
      {6, "rig sweep", check_rig_sweep},
      {7, "tilted-target direction", check_tilted_direction},
      {8, "editing", check_editing},
      {9, "learned models and expert orderings", check_learned_models},
  };
  return list;
}

std::vector<CriterionResult> run_verify(const VerifyConfig& cfg, const std::vector<int>& ids,
                                        const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<CriterionResult> out;
  for (const auto& c : criteria()) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), c.id) == ids.end()) continue;
    CriterionResult res;
    try {
      res = c.fn(cfg);
    } catch (const std::exception& e) {
      res = {c.id, c.name, false, 0, 0, std::string("error: ") + e.what(), {}};
    }
    if (on_result) on_result(res);
    out.push_back(std::move(res));
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << " (" << fmt("%.1f", r.seconds) << " s): "
     << r.detail;
  return os.str();
}

}  // namespace cguide

#include "cguide/pipeline.hpp"

#include "cguide/parallel.hpp"
#include "cguide/rng.hpp"

#include <algorithm>
#include <iomanip>

namespace cguide {

nlohmann::json ExpertConfig::to_json() const {
  return {{"domain", domain.str()},     {"positive", positive.str()}, {"negative", negative.str()},
          {"lambda", lambda},           {"n", n},                     {"steps", steps},
          {"sampler", to_string(sampler.kind)}, {"eta", sampler.eta}, {"seed", seed}};
}

ExpertConfig ExpertConfig::from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  ExpertConfig c;
  try {
    if (j.contains("domain")) c.domain = PromptId::parse(j.at("domain").get<std::string>());
    if (j.contains("positive")) c.positive = PromptId::parse(j.at("positive").get<std::string>());
    if (j.contains("negative")) c.negative = PromptId::parse(j.at("negative").get<std::string>());
    c.lambda = j.value("lambda", c.lambda);
    c.n = j.value("n", c.n);
    c.steps = j.value("steps", c.steps);
    if (j.contains("sampler")) c.sampler.kind = parse_sampler(j.at("sampler").get<std::string>());
    c.sampler.eta = j.value("eta", c.sampler.eta);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (c.n < 30) throw ConfigError(path + ".n: need at least 30 samples");
  if (c.steps < 1) throw ConfigError(path + ".steps: must be positive");
  return c;
}

const ExpertArm& ExpertReport::arm(const std::string& name) const {
  for (const auto& a : arms)
    if (a.name == name) return a;
  throw LookupError("no expert arm named '" + name + "'");
}

bool ExpertReport::contrastive_wins() const {
  const ExpertArm& c = arm("expert+contrastive");
  for (const auto& a : arms) {
    if (&a == &c) continue;
    if (!(c.concept_score.value > a.concept_score.value)) return false;
    if (a.name != "expert" && !(c.domain_fit.value < a.domain_fit.value)) return false;
  }
  return true;
}

void ExpertReport::write_csv(std::ostream& os) const {
  os << "arm,energy_distance,concept_score,concept_half_width,n\n";
  os << std::setprecision(17);
  for (const auto& a : arms) {
    os << a.name << ',' << a.domain_fit.value << ',' << a.concept_score.value << ','
       << a.concept_score.half_width.value_or(0.0) << ',' << a.concept_score.n << '\n';
  }
}

nlohmann::json ExpertReport::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& a : arms)
    j.push_back({{"arm", a.name},
                 {"guidance", a.guidance.to_json()},
                 {"domain_fit", a.domain_fit.to_json()},
                 {"concept_score", a.concept_score.to_json()}});
  return {{"arms", j}, {"contrastive_wins", contrastive_wins()}};
}

ExpertReport run_expert_guidance(const ScoreModel& generalist, const ScoreField& expert, const World& world,
                                 const ExpertConfig& config) {
  for (const PromptId& p : {config.positive, config.negative})
    if (!generalist.has_prompt(p)) throw ConfigError("expert guidance: generalist lacks prompt " + p.str());
  if (!world.has(config.domain)) throw ConfigError("expert guidance: unknown domain prompt " + config.domain.str());
  const AnalyticModel judge(world, generalist.schedule());

  GuidanceSpec base;
  base.base.kind = GuidanceBase::Kind::field;
  std::vector<std::pair<std::string, GuidanceSpec>> specs;
  specs.emplace_back("expert", base);
  GuidanceSpec cfg = base;
  cfg.terms.push_back(GuidanceTerm::cfg(config.positive, config.lambda));
  specs.emplace_back("expert+cfg", cfg);
  GuidanceSpec neg = base;
  neg.terms.push_back(GuidanceTerm::negation(config.negative, config.lambda));
  specs.emplace_back("expert+negative", neg);
  GuidanceSpec con = base;
  con.terms.push_back(GuidanceTerm::contrastive(config.positive, config.negative, LambdaSpec::constant(config.lambda)));
  specs.emplace_back("expert+contrastive", con);

  const SamplingSetup setup{TimeGrid::uniform(config.steps), generalist.schedule(), config.sampler, generalist.dim()};
  ExpertReport report;
  report.domain_reference = world.mixture(config.domain).sample(config.n, stream_seed(config.seed, 0xd0d0));

  for (auto& [name, spec] : specs) {
    validate(spec, generalist, true);
    ExpertArm arm;
    arm.name = name;
    arm.guidance = spec;
    arm.samples = sample_endpoints(compose(spec, generalist, expert), setup.grid, setup.sched, setup.sampler,
                                   setup.dim, config.n, config.seed);
    std::vector<double> scores(config.n);
    parallel_for(config.n, [&](size_t i) {
      scores[i] = contrastive_likelihood_score(judge, arm.samples.row(static_cast<Eigen::Index>(i)).transpose(),
                                               config.positive, config.negative);
    });
    arm.concept_score = mean_metric("concept_score", scores, stream_seed(config.seed, 0xb00));
    arm.domain_fit.name = "energy_distance";
    arm.domain_fit.value = energy_distance(arm.samples, report.domain_reference);
    arm.domain_fit.n = config.n;
    arm.domain_fit.seed = config.seed;
    report.arms.push_back(std::move(arm));
  }
  return report;
}

double LearnedExpertReport::max_rms() const {
  double m = expert_rms;
  for (const auto& [name, v] : generalist_rms) m = std::max(m, v);
  return m;
}

nlohmann::json LearnedExpertReport::to_json() const {
  nlohmann::json g = nlohmann::json::object();
  for (const auto& [name, v] : generalist_rms) g[name] = v;
  return {{"generalist_rms", g}, {"expert_rms", expert_rms}, {"arms", report.to_json()}};
}

LearnedExpertReport run_learned_expert(const World& world, const ExpertConfig& config, const TrainConfig& train,
                                       std::uint64_t train_seed) {
  std::vector<PromptId> prompts = world.prompts();
  prompts.push_back(PromptId::empty());
  const NoiseSchedule sched;
  const LearnedScoreModel generalist = train_dsm(world, prompts, sched, train, stream_seed(train_seed, 1));
  const LearnedScoreModel expert = finetune_expert(generalist, world, config.domain, train, stream_seed(train_seed, 2));

  LearnedExpertReport out;
  for (const PromptId& p : prompts)
    out.generalist_rms.emplace_back(p.str(),
                                    score_rms_error(generalist, p, world, p, sched, 2000, stream_seed(train_seed, 3)));
  out.expert_rms = score_rms_error(expert, PromptId::empty(), world, config.domain, sched, 2000,
                                   stream_seed(train_seed, 4));
  out.report = run_expert_guidance(generalist, expert.field(PromptId::empty()), world, config);
  return out;
}

}  // namespace cguide

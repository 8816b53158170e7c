#include "commands.hpp"

#include "artifacts.hpp"

#include "cguide/analysis.hpp"
#include "cguide/density.hpp"
#include "cguide/editing.hpp"
#include "cguide/guidance.hpp"
#include "cguide/pipeline.hpp"
#include "cguide/svg.hpp"
#include "cguide/verify.hpp"
#include "cguide/world_io.hpp"
#include "cguide/worlds.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

namespace cguide::cli {

using nlohmann::json;

namespace {

// --world accepts a file path or a built-in name; config "world" may be an
// inline world object or a built-in name.
json resolve_world(const json& config, const Overrides& o, const std::string& fallback) {
  if (o.world) {
    if (std::filesystem::exists(*o.world)) return world_to_json(load_world(*o.world));
    return world_to_json(worlds::by_name(*o.world));
  }
  if (!config.contains("world")) return world_to_json(worlds::by_name(fallback));
  const json& w = config.at("world");
  if (w.is_string()) return world_to_json(worlds::by_name(w.get<std::string>()));
  return world_to_json(world_from_json(w));
}

template <typename T>
void set_if(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

void set_default(json& j, const char* key, const json& v) {
  if (!j.contains(key)) j[key] = v;
}

void sampling_fields(json& c, const Overrides& o, int steps, size_t n) {
  set_default(c, "steps", steps);
  set_default(c, "n", n);
  set_default(c, "sampler", "em_sde");
  set_default(c, "eta", 0.1);
  set_default(c, "seed", 1);
  set_if(c, "steps", o.steps);
  set_if(c, "n", o.n);
  set_if(c, "eta", o.eta);
  set_if(c, "seed", o.seed);
  if (o.sampler) c["sampler"] = to_string(parse_sampler(*o.sampler));
  c["sampler"] = to_string(parse_sampler(c.at("sampler").get<std::string>()));
}

json lambda_json(const Overrides& o, const json& previous) {
  if (o.gamma) return {{"mode", "exact"}, {"gamma", *o.gamma}};
  if (o.lambda) return *o.lambda;
  return previous;
}

json resolve_sample(json c, const Overrides& o) {
  c["world"] = resolve_world(c, o, "two_prompt");
  sampling_fields(c, o, 1000, 1000);
  GuidanceSpec spec;
  if (c.contains("guidance")) spec = GuidanceSpec::from_json(c.at("guidance"));
  json g = spec.to_json();
  if (!c.contains("guidance")) g["base"] = {{"kind", "conditional"}, {"prompt", ""}};
  if (o.prompt) g["base"]["prompt"] = *o.prompt;
  if (o.tau) {
    g["base"]["kind"] = "cfg";
    g["base"]["tau"] = *o.tau;
  }
  if (o.positive || o.negative || o.lambda || o.gamma) {
    json kept = json::array();
    json term = {{"kind", "contrastive"}, {"positive", ""}, {"negative", ""}, {"lambda", 1.0}};
    for (const auto& t : g.value("terms", json::array())) {
      if (t.value("kind", "") == "contrastive" && term.value("positive", "").empty() && term.value("negative", "").empty())
        term = t;
      else
        kept.push_back(t);
    }
    if (o.positive) term["positive"] = *o.positive;
    if (o.negative) term["negative"] = *o.negative;
    term["lambda"] = lambda_json(o, term.at("lambda"));
    if (term.value("positive", "") == term.value("negative", ""))
      throw ConfigError("--lambda/--gamma need --positive and --negative (or a contrastive term in the config)");
    kept.push_back(term);
    g["terms"] = kept;
  }
  c["guidance"] = GuidanceSpec::from_json(g).to_json();
  return c;
}

json resolve_sweep(json c, const Overrides& o) {
  c["world"] = resolve_world(c, o, "linear");
  sampling_fields(c, o, 1000, 2000);
  set_default(c, "base", "scene");
  set_default(c, "positive", "scene+warm");
  set_default(c, "negative", "scene+cool");
  set_default(c, "lambdas", std::vector<double>{-8, -4, 0, 4, 8});
  set_if(c, "base", o.prompt);
  set_if(c, "positive", o.positive);
  set_if(c, "negative", o.negative);
  set_if(c, "lambdas", o.lambdas);
  if (c.at("lambdas").empty()) throw ConfigError("lambdas: must not be empty");
  return c;
}

json resolve_edit(json c, const Overrides& o) {
  c["world"] = resolve_world(c, o, "two_prompt");
  set_default(c, "method", "cycle");
  set_if(c, "method", o.method);
  const EditMethod method = parse_edit_method(c.at("method").get<std::string>());
  set_default(c, "search", "none");
  set_if(c, "search", o.search);
  const std::string search = c.at("search").get<std::string>();
  if (search != "none" && search != "full" && search != "reduced")
    throw ConfigError("search: expected none|full|reduced");
  set_default(c, "trials", 15);
  set_default(c, "seed", 1);
  set_if(c, "seed", o.seed);

  json t = c.value("task", json::object());
  set_default(t, "x0", std::vector<double>{-2.0});
  set_default(t, "source", "neg");
  set_default(t, "target", "pos");
  set_default(t, "lambda", method == EditMethod::cycle ? kDefaultCycleLambda : kDefaultSdeditLambda);
  set_if(t, "lambda", o.lambda);
  set_if(t, "tau", o.tau);
  set_if(t, "eta", o.eta);
  set_if(t, "steps", o.steps);
  if (o.positive) t["target"] = *o.positive;
  if (o.negative) t["source"] = *o.negative;
  c["task"] = edit_task_to_json(edit_task_from_json(t, "task"));
  c["method"] = method == EditMethod::cycle ? "cycle" : "sdedit";
  return c;
}

json resolve_expert(json c, const Overrides& o) {
  c["world"] = resolve_world(c, o, "expert");
  json e = c.value("expert", json::object());
  set_if(e, "lambda", o.lambda);
  set_if(e, "steps", o.steps);
  set_if(e, "n", o.n);
  set_if(e, "eta", o.eta);
  set_if(e, "seed", o.seed);
  set_if(e, "domain", o.prompt);
  set_if(e, "positive", o.positive);
  set_if(e, "negative", o.negative);
  if (o.sampler) e["sampler"] = *o.sampler;
  c["expert"] = ExpertConfig::from_json(e).to_json();
  set_default(c, "learned", false);
  if (o.learned) c["learned"] = true;
  json train = VerifyConfig::from_json({{"train", c.value("train", json::object())}}).to_json().at("train");
  c["train"] = train;
  set_default(c, "train_seed", 90);
  return c;
}

json resolve_density(json c, const Overrides& o) {
  c["world"] = resolve_world(c, o, "factorized");
  set_default(c, "prompt", "cat");
  set_default(c, "t", 0.1);
  set_default(c, "n", 50);
  set_default(c, "steps", 512);
  set_default(c, "divergence", "exact");
  set_default(c, "probes", 8);
  set_default(c, "exact_terminal", true);
  set_default(c, "seed", 1);
  set_if(c, "prompt", o.prompt);
  set_if(c, "n", o.n);
  set_if(c, "steps", o.steps);
  set_if(c, "seed", o.seed);
  const std::string div = c.at("divergence").get<std::string>();
  if (div != "exact" && div != "hutchinson") throw ConfigError("divergence: expected exact|hutchinson");
  return c;
}

json resolve_verify(json c, const Overrides& o) {
  json only = c.value("only", json::array());
  if (!o.only.empty()) only = o.only;
  if (o.seed) c["seed"] = *o.seed;
  json out = VerifyConfig::from_json(c).to_json();
  out["only"] = only;
  return out;
}

SamplerConfig sampler_of(const json& c) {
  return {parse_sampler(c.at("sampler").get<std::string>()), c.at("eta").get<double>()};
}

std::vector<double> column(const Matrix& m, Eigen::Index j) {
  return {m.col(j).data(), m.col(j).data() + m.rows()};
}

json moments_json(const Matrix& samples) {
  const Moments m = sample_moments(samples);
  json cov = json::array();
  for (Eigen::Index i = 0; i < m.covariance.rows(); ++i)
    cov.push_back(std::vector<double>(m.covariance.row(i).data(), m.covariance.row(i).data() + m.covariance.cols()));
  return {{"mean", std::vector<double>(m.mean.data(), m.mean.data() + m.mean.size())}, {"covariance", cov}};
}

int run_sample(const json& c, const RunDir& dir) {
  const AnalyticModel model(world_from_json(c.at("world")), NoiseSchedule{});
  const GuidanceSpec spec = GuidanceSpec::from_json(c.at("guidance"));
  validate(spec, model, false);
  const auto seed = c.at("seed").get<std::uint64_t>();
  const auto n = c.at("n").get<size_t>();
  const Matrix samples = sample_endpoints(compose(spec, model), TimeGrid::uniform(c.at("steps").get<int>()),
                                          model.schedule(), sampler_of(c), model.dim(), n, seed);
  dir.write_samples(samples);
  json metrics = moments_json(samples);
  metrics["n"] = n;
  dir.write_metrics(metrics);
  for (Eigen::Index j = 0; j < samples.cols(); ++j)
    dir.write_text("hist_x" + std::to_string(j) + ".svg",
                   svg::histogram(column(samples, j), 40, "endpoint coordinate " + std::to_string(j)));
  return kOk;
}

int run_sweep(const json& c, const RunDir& dir) {
  const AnalyticModel model(world_from_json(c.at("world")), NoiseSchedule{});
  const PromptId base = PromptId::parse(c.at("base").get<std::string>());
  const PromptId pos = PromptId::parse(c.at("positive").get<std::string>());
  const PromptId neg = PromptId::parse(c.at("negative").get<std::string>());
  for (const PromptId& p : {base, pos, neg})
    if (!model.has_prompt(p)) throw ConfigError("sweep: unknown prompt " + p.str());
  const auto lambdas = c.at("lambdas").get<std::vector<double>>();
  const auto n = c.at("n").get<size_t>();
  const SamplingSetup setup{TimeGrid::uniform(c.at("steps").get<int>()), model.schedule(), sampler_of(c), model.dim()};
  const auto field_for = [&](double lam) {
    GuidanceSpec s;
    s.base = {GuidanceBase::Kind::conditional, base, 1.0};
    s.terms.push_back(GuidanceTerm::contrastive(pos, neg, LambdaSpec::constant(lam)));
    return compose(s, model);
  };
  std::vector<Matrix> samples;
  const auto sweep = rig_sweep(field_for, lambdas, n, setup, c.at("seed").get<std::uint64_t>(), &samples);

  std::ostringstream csv;
  csv << "lambda";
  for (Eigen::Index j = 0; j < model.dim(); ++j) csv << ",mean_x" << j << ",se_x" << j;
  csv << '\n';
  json rows = json::array();
  std::vector<svg::Series> series(static_cast<size_t>(model.dim()));
  Matrix all(static_cast<Eigen::Index>(n * lambdas.size()), model.dim());
  std::vector<std::vector<std::string>> tags;
  for (size_t k = 0; k < sweep.size(); ++k) {
    csv << num(sweep[k].lambda);
    for (Eigen::Index j = 0; j < model.dim(); ++j) {
      csv << ',' << num(sweep[k].mean[j]) << ',' << num(sweep[k].se[j]);
      auto& s = series[static_cast<size_t>(j)];
      s.label = "mean x" + std::to_string(j);
      s.x.push_back(sweep[k].lambda);
      s.y.push_back(sweep[k].mean[j]);
    }
    csv << '\n';
    rows.push_back({{"lambda", sweep[k].lambda},
                    {"mean", std::vector<double>(sweep[k].mean.data(), sweep[k].mean.data() + model.dim())},
                    {"se", std::vector<double>(sweep[k].se.data(), sweep[k].se.data() + model.dim())}});
    all.middleRows(static_cast<Eigen::Index>(k * n), static_cast<Eigen::Index>(n)) = samples[k];
    for (size_t i = 0; i < n; ++i) tags.push_back({num(sweep[k].lambda)});
  }
  dir.write_text("sweep.csv", csv.str());
  dir.write_samples(all, {"lambda"}, tags);
  dir.write_metrics({{"n_per_lambda", n}, {"sweep", rows}});
  dir.write_text("sweep.svg", svg::line_plot(series, "rig sweep", "lambda", "endpoint mean"));
  return kOk;
}

int run_edit(const json& c, const RunDir& dir) {
  const AnalyticModel model(world_from_json(c.at("world")), NoiseSchedule{});
  const EditMethod method = parse_edit_method(c.at("method").get<std::string>());
  const EditTask task = edit_task_from_json(c.at("task"), "task");
  task.validate(model);
  const auto seed = c.at("seed").get<std::uint64_t>();
  const std::string search = c.at("search").get<std::string>();
  json metrics;
  Vector edited;
  if (search == "none") {
    edited = run_edit(method, task, model, seed);
  } else {
    SearchGrid grid = search == "full" ? SearchGrid::full() : SearchGrid::reduced();
    grid.trials = c.at("trials").get<int>();
    const SearchReport report = hyperparameter_search(method, task, model, grid, seed);
    std::ostringstream csv;
    report.write_csv(csv);
    dir.write_text("search.csv", csv.str());
    metrics["search"] = report.summary();
    edited = report.best;
    std::vector<std::string> labels;
    std::vector<double> best;
    for (double tau : grid.taus) {
      double b = -INFINITY;
      for (const auto& r : report.rows)
        if (r.tau == tau) b = std::max(b, r.selector);
      labels.push_back("tau " + num(tau));
      best.push_back(b);
    }
    dir.write_text("search.svg", svg::bar_chart(labels, best, "best selector per tau"));
  }
  Matrix rows(2, model.dim());
  rows.row(0) = task.x0.transpose();
  rows.row(1) = edited.transpose();
  dir.write_samples(rows, {"kind"}, {{"source"}, {"edited"}});
  metrics["selector"] = directional_selector(model, task.source, task.target, task.x0, edited);
  metrics["sq_distance"] = (edited - task.x0).squaredNorm();
  metrics["edited"] = std::vector<double>(edited.data(), edited.data() + edited.size());
  dir.write_metrics(metrics);
  std::vector<std::string> labels;
  std::vector<double> deltas;
  for (Eigen::Index j = 0; j < edited.size(); ++j) {
    labels.push_back("x" + std::to_string(j));
    deltas.push_back(edited[j] - task.x0[j]);
  }
  dir.write_text("displacement.svg", svg::bar_chart(labels, deltas, "edit displacement per coordinate"));
  return kOk;
}

int run_expert(const json& c, const RunDir& dir) {
  const World world = world_from_json(c.at("world"));
  const ExpertConfig ec = ExpertConfig::from_json(c.at("expert"));
  json metrics;
  ExpertReport report;
  if (c.at("learned").get<bool>()) {
    const VerifyConfig vc = VerifyConfig::from_json({{"train", c.at("train")}});
    LearnedExpertReport lr = run_learned_expert(world, ec, vc.train, c.at("train_seed").get<std::uint64_t>());
    metrics = lr.to_json();
    report = std::move(lr.report);
  } else {
    const AnalyticModel model(world, NoiseSchedule{});
    report = run_expert_guidance(model, model.field(ec.domain), world, ec);
    metrics = report.to_json();
  }
  std::ostringstream csv;
  report.write_csv(csv);
  dir.write_text("table.csv", csv.str());
  Matrix all(static_cast<Eigen::Index>(ec.n * report.arms.size()), world.dim());
  std::vector<std::vector<std::string>> tags;
  std::vector<std::string> names;
  std::vector<double> fit, concept_scores;
  for (size_t k = 0; k < report.arms.size(); ++k) {
    const auto& arm = report.arms[k];
    all.middleRows(static_cast<Eigen::Index>(k * ec.n), static_cast<Eigen::Index>(ec.n)) = arm.samples;
    for (size_t i = 0; i < ec.n; ++i) tags.push_back({arm.name});
    names.push_back(arm.name);
    fit.push_back(arm.domain_fit.value);
    concept_scores.push_back(arm.concept_score.value);
  }
  dir.write_samples(all, {"arm"}, tags);
  dir.write_metrics(metrics);
  dir.write_text("domain_fit.svg", svg::bar_chart(names, fit, "energy distance to domain (lower is better)"));
  dir.write_text("concept_score.svg", svg::bar_chart(names, concept_scores, "concept_scores score (higher is better)"));
  return kOk;
}

int run_density(const json& c, const RunDir& dir) {
  const AnalyticModel model(world_from_json(c.at("world")), NoiseSchedule{});
  const PromptId prompt = PromptId::parse(c.at("prompt").get<std::string>());
  if (!model.has_prompt(prompt)) throw ConfigError("prompt: unknown prompt " + prompt.str());
  const double t = c.at("t").get<double>();
  const auto n = c.at("n").get<size_t>();
  OdeDensityConfig oc;
  oc.n_steps = c.at("steps").get<int>();
  oc.exact_terminal = c.at("exact_terminal").get<bool>();
  oc.seed = c.at("seed").get<std::uint64_t>();
  if (c.at("divergence").get<std::string>() == "hutchinson") {
    oc.divergence.mode = DivergenceConfig::Mode::hutchinson;
    oc.divergence.probes = c.at("probes").get<int>();
  }
  const GaussianMixture pt = marginal_params(prompt, t, model.world(), model.schedule());
  const Matrix points = pt.sample(n, oc.seed);
  std::vector<double> ode(n), exact(n), err(n);
  for (size_t i = 0; i < n; ++i) {
    const Vector x = points.row(static_cast<Eigen::Index>(i)).transpose();
    OdeDensityConfig pc = oc;
    pc.seed = stream_seed(oc.seed, i);
    ode[i] = log_density_ode(model, prompt, x, t, pc).log_density;
    exact[i] = *model.log_density(prompt, x, t);
    err[i] = ode[i] - exact[i];
  }
  std::ostringstream csv;
  for (Eigen::Index j = 0; j < model.dim(); ++j) csv << 'x' << j << ',';
  csv << "log_density_ode,log_density_exact,error\n";
  double max_err = 0.0, mean_err = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < model.dim(); ++j) csv << num(points(static_cast<Eigen::Index>(i), j)) << ',';
    csv << num(ode[i]) << ',' << num(exact[i]) << ',' << num(err[i]) << '\n';
    max_err = std::max(max_err, std::abs(err[i]));
    mean_err += std::abs(err[i]) / static_cast<double>(n);
  }
  dir.write_text("density.csv", csv.str());
  dir.write_samples(points);
  dir.write_metrics({{"n", n}, {"t", t}, {"max_abs_error", max_err}, {"mean_abs_error", mean_err}});
  dir.write_text("error_hist.svg", svg::histogram(err, 30, "ODE minus closed-form log-density"));
  return kOk;
}

int run_verify_cmd(const json& c, const RunDir& dir) {
  const VerifyConfig vc = VerifyConfig::from_json(c);
  const auto only = c.at("only").get<std::vector<int>>();
  for (int id : only)
    if (id < 1 || id > static_cast<int>(criteria().size())) throw ConfigError("only: no criterion " + std::to_string(id));
  bool all = true;
  const auto results = run_verify(vc, only, [&](const CriterionResult& r) {
    std::cout << format_result(r) << std::endl;
    all &= r.passed;
  });
  std::ostringstream csv;
  csv << "id,name,passed,seconds,detail\n";
  json arr = json::array();
  std::vector<std::string> labels;
  std::vector<double> secs;
  for (const auto& r : results) {
    std::string detail = r.detail;
    for (char& ch : detail)
      if (ch == ',') ch = ';';
    csv << r.id << ',' << r.name << ',' << (r.passed ? "pass" : "fail") << ',' << num(r.seconds) << ',' << detail << '\n';
    arr.push_back(r.to_json());
    labels.push_back(std::to_string(r.id));
    secs.push_back(r.seconds);
  }
  dir.write_text("verify.csv", csv.str());
  dir.write_metrics({{"passed", all}, {"results", arr}});
  dir.write_text("runtime.svg", svg::bar_chart(labels, secs, "criterion runtime (s)"));
  std::cout << (all ? "verify: all criteria passed" : "verify: FAILED") << std::endl;
  return all ? kOk : kAcceptance;
}

std::uint64_t seed_of(const json& c) {
  if (c.contains("seed")) return c.at("seed").get<std::uint64_t>();
  if (c.contains("expert")) return c.at("expert").at("seed").get<std::uint64_t>();
  return 0;
}

}  // namespace

json resolve(const std::string& command, json config, const Overrides& o) {
  if (config.is_null()) config = json::object();
  if (!config.is_object()) throw ConfigError("config: expected a JSON object");
  config.erase("command");
  json out;
  if (command == "sample") out = resolve_sample(config, o);
  else if (command == "sweep") out = resolve_sweep(config, o);
  else if (command == "edit") out = resolve_edit(config, o);
  else if (command == "expert") out = resolve_expert(config, o);
  else if (command == "density") out = resolve_density(config, o);
  else if (command == "verify") out = resolve_verify(config, o);
  else throw ConfigError("unknown subcommand '" + command + "'");
  out["command"] = command;
  return out;
}

int execute(const std::string& command, const json& resolved, const std::string& out) {
  const RunDir dir(out);
  dir.write_config(resolved);
  dir.write_seed(seed_of(resolved));
  if (command == "sample") return run_sample(resolved, dir);
  if (command == "sweep") return run_sweep(resolved, dir);
  if (command == "edit") return run_edit(resolved, dir);
  if (command == "expert") return run_expert(resolved, dir);
  if (command == "density") return run_density(resolved, dir);
  if (command == "verify") return run_verify_cmd(resolved, dir);
  throw ConfigError("unknown subcommand '" + command + "'");
}

}  // namespace cguide::cli

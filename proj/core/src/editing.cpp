#include "cguide/editing.hpp"

#include "cguide/parallel.hpp"
#include "cguide/rng.hpp"

#include <bit>
#include <cmath>
#include <ostream>

namespace cguide {

GuidanceSpec EditTask::decode_guidance() const {
  GuidanceSpec spec;
  spec.base.kind = GuidanceBase::Kind::cfg;
  spec.base.prompt = target;
  spec.base.tau = tau;
  if (lambda != 0.0) spec.terms.push_back(GuidanceTerm::contrastive(target, source, LambdaSpec::constant(lambda)));
  return spec;
}

TimeGrid EditTask::grid(const NoiseSchedule& sched) const {
  if (!(t_e > kTimeFloor && t_e <= sched.T)) throw DomainError("edit: t_e must lie in (time floor, T]");
  const int n = std::max(1, static_cast<int>(std::lround(t_e / sched.T * steps_per_unit)));
  return TimeGrid::uniform(n, t_e, kTimeFloor);
}

void EditTask::validate(const ScoreModel& model) const {
  if (x0.size() != model.dim()) throw ShapeError("edit: source vector dimension does not match the model");
  if (!model.has_prompt(source)) throw ConfigError("edit.source: unknown prompt '" + source.str() + "'");
  if (!model.has_prompt(target)) throw ConfigError("edit.target: unknown prompt '" + target.str() + "'");
  if (steps_per_unit <= 0) throw ConfigError("edit.steps: must be positive");
  const double T = model.schedule().T;
  if (!(t_e > kTimeFloor && t_e <= T)) throw DomainError("edit: t_e must lie in (time floor, T]");
}

Vector sdedit(const EditTask& task, const ScoreModel& model, std::uint64_t seed) {
  task.validate(model);
  const NoiseSchedule& sched = model.schedule();
  const TimeGrid grid = task.grid(sched);
  const TrajectoryNoise noise = draw_noise(grid, model.dim(), seed);
  const Vector x_te = perturb(task.x0, grid.start(), sched, noise.x_start);
  const ScoreField field = compose(task.decode_guidance(), model);
  return replay(field, grid, sched, task.sampler, x_te, noise.record, false).endpoint();
}

CycleEncoding cycle_encode(const ScoreModel& model, const Vector& x0, const PromptId& source, const TimeGrid& grid,
                           double eta, std::uint64_t seed, double encode_tau) {
  if (!(eta > 0.0)) throw ConfigError("cycle_encode: eta must be positive (noise is underdetermined at eta = 0)");
  if (x0.size() != model.dim()) throw ShapeError("cycle_encode: dimension mismatch");
  const NoiseSchedule& sched = model.schedule();
  const ScoreField field = [&](const Vector& x, double t) { return cfg_score(model, source, encode_tau, x, t); };
  Rng rng(seed);
  CycleEncoding enc;
  Vector x = perturb(x0, grid.start(), sched, rng.normal_vector(x0.size()));
  enc.x_te = x;
  enc.record.z.reserve(static_cast<size_t>(grid.n_steps()));
  for (int i = 0; i < grid.n_steps(); ++i) {
    const double t = grid[i];
    const double t_next = grid[i + 1];
    const DdimCoefficients c = ddim_coefficients(t, t_next, eta, sched);
    Vector x_next;
    if (i + 1 == grid.n_steps()) {
      x_next = x0;
    } else {
      // Posterior q(x_t' | x_t, x0) of the DDIM(eta) family.
      const Vector eps_true = (x - c.alpha * x0) / c.sigma;
      x_next = c.alpha_next * x0 + c.dir * eps_true + c.noise_scale * rng.normal_vector(x0.size());
    }
    const DdimPrediction p = ddim_predict(x, t, field, sched);
    Vector z = (x_next - c.alpha_next * p.x0_hat - c.dir * p.eps_hat) / c.noise_scale;
    if (!z.allFinite()) throw NumericError("cycle_encode: non-finite noise at step " + std::to_string(i));
    enc.record.z.push_back(std::move(z));
    x = std::move(x_next);
  }
  return enc;
}

Vector cycle_decode(const ScoreModel& model, const Vector& x_te, const NoiseRecord& record,
                    const GuidanceSpec& guidance, const TimeGrid& grid, double eta) {
  if (record.size() != static_cast<size_t>(grid.n_steps())) {
    throw ShapeError("cycle_decode: record length " + std::to_string(record.size()) + " != grid steps " +
                     std::to_string(grid.n_steps()));
  }
  const ScoreField field = compose(guidance, model);
  return replay(field, grid, model.schedule(), {SamplerKind::ddim, eta}, x_te, record, false).endpoint();
}

Vector cycle_edit(const EditTask& task, const ScoreModel& model, std::uint64_t seed) {
  task.validate(model);
  if (task.sampler.kind != SamplerKind::ddim) throw ConfigError("cycle editing requires the ddim sampler");
  const TimeGrid grid = task.grid(model.schedule());
  const CycleEncoding enc = cycle_encode(model, task.x0, task.source, grid, task.sampler.eta, seed, task.encode_tau);
  return cycle_decode(model, enc.x_te, enc.record, task.decode_guidance(), grid, task.sampler.eta);
}

Vector run_edit(EditMethod method, const EditTask& task, const ScoreModel& model, std::uint64_t seed) {
  return method == EditMethod::sdedit ? sdedit(task, model, seed) : cycle_edit(task, model, seed);
}

double directional_selector(const ScoreModel& model, const PromptId& source, const PromptId& target,
                            const Vector& x0, const Vector& edited) {
  auto lp = [&](const PromptId& p, const Vector& x) {
    const auto v = model.log_density(p, x, 0.0);
    if (!v) throw ConfigError("directional selector needs closed-form log-densities");
    return *v;
  };
  return (lp(target, edited) - lp(source, edited)) - (lp(target, x0) - lp(source, x0));
}

size_t select_best(const std::vector<double>& scores) {
  if (scores.empty()) throw ConfigError("select_best: no candidates");
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

SearchGrid SearchGrid::full() { return {{1, 1.5, 2, 3, 4, 5}, {0.15, 0.20, 0.25, 0.30, 0.40, 0.50}, 15}; }
SearchGrid SearchGrid::reduced() { return {{1, 1.5, 2, 3}, {0.30, 0.40, 0.50}, 15}; }

SearchReport hyperparameter_search(EditMethod method, const EditTask& task, const ScoreModel& model,
                                   const SearchGrid& grid, std::uint64_t seed) {
  if (grid.taus.empty() || grid.t_es.empty() || grid.trials <= 0) throw ConfigError("search grid is empty");
  task.validate(model);
  const size_t per_te = grid.taus.size() * static_cast<size_t>(grid.trials);
  const size_t total = grid.t_es.size() * per_te;
  std::vector<SearchRow> rows(total);
  std::vector<Vector> edits(total);
  parallel_for(total, [&](size_t k) {
    const size_t ie = k / per_te;
    const size_t it = (k % per_te) / static_cast<size_t>(grid.trials);
    const int trial = static_cast<int>(k % static_cast<size_t>(grid.trials));
    EditTask cand = task;
    cand.t_e = grid.t_es[ie];
    cand.tau = grid.taus[it];
    const std::uint64_t s = stream_seed(stream_seed(seed, static_cast<std::uint64_t>(trial)),
                                        std::bit_cast<std::uint64_t>(cand.t_e));
    edits[k] = run_edit(method, cand, model, s);
    rows[k] = {cand.tau, cand.t_e, trial, directional_selector(model, task.source, task.target, task.x0, edits[k]),
               (edits[k] - task.x0).squaredNorm()};
  });
  std::vector<double> scores(total);
  for (size_t k = 0; k < total; ++k) scores[k] = rows[k].selector;
  const size_t best = select_best(scores);
  return {edits[best], rows[best].selector, rows[best].tau, rows[best].t_e, std::move(rows)};
}

void SearchReport::write_csv(std::ostream& os) const {
  os << "tau,t_e,trial,selector,sq_distance\n";
  os.precision(17);
  for (const auto& r : rows) os << r.tau << ',' << r.t_e << ',' << r.trial << ',' << r.selector << ',' << r.sq_distance << '\n';
}

nlohmann::json SearchReport::summary() const {
  return {{"best_selector", best_selector},
          {"best_tau", best_tau},
          {"best_t_e", best_t_e},
          {"best", std::vector<double>(best.data(), best.data() + best.size())},
          {"candidates", rows.size()}};
}

EditMethod parse_edit_method(const std::string& name) {
  if (name == "sdedit") return EditMethod::sdedit;
  if (name == "cycle") return EditMethod::cycle;
  throw ConfigError("unknown edit method '" + name + "' (expected sdedit|cycle)");
}

EditTask edit_task_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  EditTask task;
  try {
    if (!j.contains("x0")) throw ConfigError(path + ".x0: missing required field");
    const auto x0 = j.at("x0").get<std::vector<double>>();
    task.x0 = Eigen::Map<const Vector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
    if (!j.contains("source") || !j.contains("target")) throw ConfigError(path + ": needs 'source' and 'target'");
    task.source = PromptId::parse(j.at("source").get<std::string>());
    task.target = PromptId::parse(j.at("target").get<std::string>());
    task.t_e = j.value("t_e", task.t_e);
    task.tau = j.value("tau", task.tau);
    task.lambda = j.value("lambda", task.lambda);
    task.encode_tau = j.value("encode_tau", task.encode_tau);
    task.sampler.eta = j.value("eta", task.sampler.eta);
    task.steps_per_unit = j.value("steps", task.steps_per_unit);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return task;
}

nlohmann::json edit_task_to_json(const EditTask& task) {
  return {{"x0", std::vector<double>(task.x0.data(), task.x0.data() + task.x0.size())},
          {"source", task.source.str()},
          {"target", task.target.str()},
          {"t_e", task.t_e},
          {"tau", task.tau},
          {"lambda", task.lambda},
          {"encode_tau", task.encode_tau},
          {"eta", task.sampler.eta},
          {"steps", task.steps_per_unit}};
}

}  // namespace cguide

#pragma once

#include "cguide/guidance.hpp"
#include "cguide/model.hpp"
#include "cguide/sampler.hpp"
#include "cguide/schedule.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <vector>

namespace cguide {

enum class EditMethod { sdedit, cycle };

/// Editing defaults: stochastic DDIM (eta = 0.1) with 100 steps over [0, T];
/// contrastive strength 10 for SDEdit and 6 for cycle decoding.
inline constexpr double kDefaultEditEta = 0.1;
inline constexpr int kDefaultEditSteps = 100;
inline constexpr double kDefaultSdeditLambda = 10.0;
inline constexpr double kDefaultCycleLambda = 6.0;

struct EditTask {
  Vector x0;
  PromptId source;
  PromptId target;
  double t_e = 0.3;          // encode time as a fraction of T
  double tau = 1.0;          // decode CFG strength
  double lambda = 0.0;       // contrastive strength (y+ = target, y- = source)
  double encode_tau = 1.0;   // cycle encoding CFG strength
  SamplerConfig sampler{SamplerKind::ddim, kDefaultEditEta};
  int steps_per_unit = kDefaultEditSteps;

  /// Decode-time field spec: cfg(target, tau) + lambda (s(target) - s(source)).
  GuidanceSpec decode_guidance() const;
  /// Grid from t_e down to the time floor with round(t_e * steps_per_unit) steps (at least one).
  TimeGrid grid(const NoiseSchedule& sched) const;
  void validate(const ScoreModel& model) const;
};

/// Perturbs x0 to t_e, then samples down with the composed target field.
Vector sdedit(const EditTask& task, const ScoreModel& model, std::uint64_t seed);

struct CycleEncoding {
  Vector x_te;
  NoiseRecord record;
};

/// Samples a forward-consistent trajectory x_{t_e} -> ... -> x0 from the
/// DDIM(eta) posterior family of the VP kernel and solves each DDIM(eta)
/// update of the source field for the noise that reproduces the next state.
/// The final state is pinned to x0, so decoding under the source field
/// reconstructs x0. eta must be positive.
CycleEncoding cycle_encode(const ScoreModel& model, const Vector& x0, const PromptId& source, const TimeGrid& grid,
                           double eta, std::uint64_t seed, double encode_tau = 1.0);

/// Deterministic DDIM(eta) decode reusing the recorded noise.
Vector cycle_decode(const ScoreModel& model, const Vector& x_te, const NoiseRecord& record,
                    const GuidanceSpec& guidance, const TimeGrid& grid, double eta);

/// Full cycle edit of a task.
Vector cycle_edit(const EditTask& task, const ScoreModel& model, std::uint64_t seed);

Vector run_edit(EditMethod method, const EditTask& task, const ScoreModel& model, std::uint64_t seed);

/// [log p0(x|target) - log p0(x|source)] - [log p0(x0|target) - log p0(x0|source)].
double directional_selector(const ScoreModel& model, const PromptId& source, const PromptId& target,
                            const Vector& x0, const Vector& edited);

/// Index of the first maximum.
size_t select_best(const std::vector<double>& scores);

struct SearchGrid {
  std::vector<double> taus;
  std::vector<double> t_es;
  int trials = 15;

  /// Full enumeration: tau in {1, 1.5, 2, 3, 4, 5}, encode step in {15, ..., 50} of 100.
  static SearchGrid full();
  /// Reduced enumeration used with the contrastive term: tau in {1, 1.5, 2, 3}, step in {30, 40, 50}.
  static SearchGrid reduced();
};

struct SearchRow {
  double tau;
  double t_e;
  int trial;
  double selector;
  double sq_distance;  // ||edited - x0||^2
};

struct SearchReport {
  Vector best;
  double best_selector;
  double best_tau;
  double best_t_e;
  std::vector<SearchRow> rows;

  void write_csv(std::ostream& os) const;
  nlohmann::json summary() const;
};

/// Enumerates grid combinations x trials of one edit method and keeps the
/// candidate with the highest directional selector. Trial k at a given t_e
/// uses the same seed for every tau and every method.
SearchReport hyperparameter_search(EditMethod method, const EditTask& task, const ScoreModel& model,
                                   const SearchGrid& grid, std::uint64_t seed);

EditMethod parse_edit_method(const std::string& name);

/// {"x0": [...], "source": "a", "target": "b", "t_e": 0.3, "tau": 1, "lambda": 6,
///  "eta": 0.1, "steps": 100}
EditTask edit_task_from_json(const nlohmann::json& j, const std::string& path = "edit");
nlohmann::json edit_task_to_json(const EditTask& task);

}  // namespace cguide

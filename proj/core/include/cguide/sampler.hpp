#pragma once

#include "cguide/schedule.hpp"
#include "cguide/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cguide {

enum class SamplerKind { em_sde, pf_ode, ddim };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::em_sde;
  /// Stochasticity of the ddim update; ignored by the other samplers.
  double eta = 0.1;

  bool stochastic() const { return kind == SamplerKind::em_sde || (kind == SamplerKind::ddim && eta != 0.0); }
};

std::string to_string(SamplerKind kind);
/// Accepts "em", "em_sde", "ode", "pf_ode", "ddim".
SamplerKind parse_sampler(const std::string& name);

/// Per-step standard-normal draws, indexed like the grid steps.
struct NoiseRecord {
  std::vector<Vector> z;

  size_t size() const { return z.size(); }
};

struct State {
  double t;
  Vector x;
};

struct Trajectory {
  std::vector<State> states;
  std::optional<NoiseRecord> noise;

  const Vector& endpoint() const { return states.back().x; }
};

/// Everything random about one trajectory: the starting point at grid.start()
/// and one noise vector per step.
struct TrajectoryNoise {
  Vector x_start;
  NoiseRecord record;
};

/// Euler-Maruyama step of the reverse-time VP SDE (dt < 0):
///   x' = x + [-beta x / 2 - beta s(x, t)] dt + sqrt(beta |dt|) z.
Vector reverse_sde_step(const Vector& x, double t, double dt, const ScoreField& score,
                        const NoiseSchedule& sched, const Vector& noise);

/// Heun step of the probability-flow ODE dx = [-beta x / 2 - beta s / 2] dt.
/// dt may have either sign.
Vector pf_ode_step(const Vector& x, double t, double dt, const ScoreField& score,
                   const NoiseSchedule& sched);

/// Drift of the probability-flow ODE.
Vector pf_ode_drift(const Vector& x, double t, const ScoreField& score, const NoiseSchedule& sched);

/// Coefficients of the stochastic DDIM update from t to t_next < t:
///   x' = alpha_next * x0_hat + dir * eps_hat + noise_scale * z.
struct DdimCoefficients {
  double alpha;
  double sigma;
  double alpha_next;
  double dir;
  double noise_scale;
};
DdimCoefficients ddim_coefficients(double t, double t_next, double eta, const NoiseSchedule& sched);

/// eps_hat = -sigma_t s(x, t); x0_hat = (x - sigma_t eps_hat) / alpha_t.
struct DdimPrediction {
  Vector eps_hat;
  Vector x0_hat;
};
DdimPrediction ddim_predict(const Vector& x, double t, const ScoreField& score, const NoiseSchedule& sched);

Vector ddim_step(const Vector& x, double t, double t_next, const ScoreField& score,
                 const NoiseSchedule& sched, double eta, const Vector& noise);

/// Draws x_start ~ N(0, I) and the per-step noise from a single seed.
/// Every sampler consumes the draw in the same order, so two fields replayed
/// on the same TrajectoryNoise see identical randomness.
TrajectoryNoise draw_noise(const TimeGrid& grid, Eigen::Index dim, std::uint64_t seed);

/// Runs the sampler from noise.x_start using the recorded per-step noise.
/// Throws NumericError naming the step if the state becomes non-finite.
Trajectory replay(const ScoreField& score, const TimeGrid& grid, const NoiseSchedule& sched,
                  const SamplerConfig& sampler, const Vector& x_start, const NoiseRecord& noise,
                  bool keep_states = true);

/// sample = replay(draw_noise(seed)); optionally starts from a given point.
Trajectory sample(const ScoreField& score, const TimeGrid& grid, const NoiseSchedule& sched,
                  const SamplerConfig& sampler, Eigen::Index dim, std::uint64_t seed,
                  bool record_noise = false, const std::optional<Vector>& x_start = std::nullopt);

/// n endpoints (one per row); trajectory i uses stream_seed(run_seed, i).
Matrix sample_endpoints(const ScoreField& score, const TimeGrid& grid, const NoiseSchedule& sched,
                        const SamplerConfig& sampler, Eigen::Index dim, size_t n, std::uint64_t run_seed);

}  // namespace cguide

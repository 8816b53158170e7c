#pragma once

#include "cguide/model.hpp"
#include "cguide/rng.hpp"
#include "cguide/schedule.hpp"
#include "cguide/types.hpp"
#include "cguide/world.hpp"

#include <functional>

namespace cguide {

using DriftField = std::function<Vector(const Vector& x, double t)>;

struct DivergenceConfig {
  enum class Mode { exact_jacobian, hutchinson };
  Mode mode = Mode::exact_jacobian;
  int probes = 1;  // hutchinson only
};

/// tr(d drift / dx) at (x, t). Exact mode sums central finite differences of
/// the Jacobian diagonal with h_i = 1e-4 (1 + |x_i|) and requires d <= 8;
/// hutchinson averages Rademacher probes v^T J v (directional differences)
/// drawn from rng. Throws NumericError on a non-finite evaluation.
double divergence(const DriftField& drift, const Vector& x, double t, const DivergenceConfig& config,
                  Rng* rng = nullptr);

struct OdeDensityConfig {
  int n_steps = 512;
  DivergenceConfig divergence;
  std::uint64_t seed = 0;  // hutchinson probes
  /// Use the model's closed-form log p_T instead of the isometric N(0, I).
  bool exact_terminal = false;
};

struct DensityEstimate {
  double log_density;
  double t;
  Vector x;
  Vector x_terminal;
  int n_steps;
  DivergenceConfig divergence;
};

/// log of the standard normal density.
double log_standard_normal(const Vector& x);

/// Integrates (x, log p) jointly along the probability-flow ODE from t to T
/// with Heun steps:
///   dx/ds = -beta(s) (x + s(x, s)) / 2,   d(log p)/ds = -tr(d drift / dx),
/// and returns log p_t(x) = log p_T(x_T) + int_t^T tr(d drift / dx) ds.
/// terminal_log_density defaults to the isometric Gaussian. Aborts with
/// NumericError if |x| exceeds 1e6.
DensityEstimate log_density_ode(const ScoreField& score, const Vector& x, double t, const NoiseSchedule& sched,
                                const OdeDensityConfig& config = {},
                                const std::function<double(const Vector&)>& terminal_log_density = nullptr);

/// Same, for one prompt of a model; exact_terminal uses the model's own
/// closed-form density at T.
DensityEstimate log_density_ode(const ScoreModel& model, const PromptId& prompt, const Vector& x, double t,
                                const OdeDensityConfig& config = {});

/// lambda_t = gamma p- q-^g / (p+ q+^g + p- q-^g) with both densities from
/// two ODE solves. Per sampler step this costs O(n_steps), hence O(N^2) for a
/// whole trajectory.
double lambda_via_ode(const ScoreModel& model, const Contrast& contrast, const Vector& x, double t,
                      const OdeDensityConfig& config = {});

}  // namespace cguide

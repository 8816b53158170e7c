#include "cguide/sampler.hpp"

#include "cguide/parallel.hpp"
#include "cguide/rng.hpp"

#include <cmath>
#include <sstream>

namespace cguide {

namespace {

std::string describe(const Vector& x) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

Vector checked_score(const ScoreField& score, const Vector& x, double t) {
  Vector s = score(x, t);
  if (s.size() != x.size()) throw ShapeError("score field changed dimension");
  if (!s.allFinite()) {
    std::ostringstream os;
    os << "non-finite score at t=" << t << ", x=" << describe(x);
    throw NumericError(os.str());
  }
  return s;
}

}  // namespace

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::em_sde: return "em_sde";
    case SamplerKind::pf_ode: return "pf_ode";
    case SamplerKind::ddim: return "ddim";
  }
  return "unknown";
}

SamplerKind parse_sampler(const std::string& name) {
  if (name == "em" || name == "em_sde") return SamplerKind::em_sde;
  if (name == "ode" || name == "pf_ode") return SamplerKind::pf_ode;
  if (name == "ddim") return SamplerKind::ddim;
  throw ConfigError("unknown sampler '" + name + "' (expected em|ode|ddim)");
}

Vector reverse_sde_step(const Vector& x, double t, double dt, const ScoreField& score,
                        const NoiseSchedule& sched, const Vector& noise) {
  if (!(dt < 0.0)) throw DomainError("reverse_sde_step: dt must be negative");
  require_same_dim(x, noise, "reverse_sde_step");
  const double beta = sched.beta(t);
  const Vector s = checked_score(score, x, t);
  return x + (-0.5 * beta * x - beta * s) * dt + std::sqrt(beta * -dt) * noise;
}

Vector pf_ode_drift(const Vector& x, double t, const ScoreField& score, const NoiseSchedule& sched) {
  const double beta = sched.beta(t);
  return -0.5 * beta * (x + checked_score(score, x, t));
}

Vector pf_ode_step(const Vector& x, double t, double dt, const ScoreField& score,
                   const NoiseSchedule& sched) {
  const Vector k1 = pf_ode_drift(x, t, score, sched);
  const Vector predictor = x + dt * k1;
  const Vector k2 = pf_ode_drift(predictor, t + dt, score, sched);
  return x + 0.5 * dt * (k1 + k2);
}

DdimCoefficients ddim_coefficients(double t, double t_next, double eta, const NoiseSchedule& sched) {
  if (!(t_next < t)) throw DomainError("ddim: t_next must be below t");
  DdimCoefficients c{};
  c.alpha = sched.alpha(t);
  c.sigma = sched.sigma(t);
  c.alpha_next = sched.alpha(t_next);
  const double sigma_next = sched.sigma(t_next);
  // 1 - alpha_t^2 / alpha_next^2 = -expm1(B(t_next) - B(t)).
  const double gap = -std::expm1(sched.integrated_beta(t_next) - sched.integrated_beta(t));
  const double tilde_var = sigma_next * sigma_next / (c.sigma * c.sigma) * gap;
  c.noise_scale = eta * std::sqrt(tilde_var);
  c.dir = std::sqrt(std::max(0.0, sigma_next * sigma_next - c.noise_scale * c.noise_scale));
  return c;
}

DdimPrediction ddim_predict(const Vector& x, double t, const ScoreField& score, const NoiseSchedule& sched) {
  const double a = sched.alpha(t);
  const double s = sched.sigma(t);
  DdimPrediction p;
  p.eps_hat = -s * checked_score(score, x, t);
  p.x0_hat = (x - s * p.eps_hat) / a;
  return p;
}

Vector ddim_step(const Vector& x, double t, double t_next, const ScoreField& score,
                 const NoiseSchedule& sched, double eta, const Vector& noise) {
  require_same_dim(x, noise, "ddim_step");
  const DdimCoefficients c = ddim_coefficients(t, t_next, eta, sched);
  const DdimPrediction p = ddim_predict(x, t, score, sched);
  return c.alpha_next * p.x0_hat + c.dir * p.eps_hat + c.noise_scale * noise;
}

TrajectoryNoise draw_noise(const TimeGrid& grid, Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  TrajectoryNoise out;
  out.x_start = rng.normal_vector(dim);
  out.record.z.reserve(static_cast<size_t>(grid.n_steps()));
  for (int i = 0; i < grid.n_steps(); ++i) out.record.z.push_back(rng.normal_vector(dim));
  return out;
}

Trajectory replay(const ScoreField& score, const TimeGrid& grid, const NoiseSchedule& sched,
                  const SamplerConfig& sampler, const Vector& x_start, const NoiseRecord& noise,
                  bool keep_states) {
  if (noise.size() != static_cast<size_t>(grid.n_steps())) {
    throw ShapeError("noise record length " + std::to_string(noise.size()) + " != grid steps " +
                     std::to_string(grid.n_steps()));
  }
  Trajectory traj;
  traj.states.reserve(keep_states ? noise.size() + 1 : 1);
  Vector x = x_start;
  if (keep_states) traj.states.push_back({grid[0], x});
  for (int i = 0; i < grid.n_steps(); ++i) {
    const double t = grid[i];
    const double t_next = grid[i + 1];
    const Vector& z = noise.z[static_cast<size_t>(i)];
    try {
      switch (sampler.kind) {
        case SamplerKind::em_sde: x = reverse_sde_step(x, t, t_next - t, score, sched, z); break;
        case SamplerKind::pf_ode: x = pf_ode_step(x, t, t_next - t, score, sched); break;
        case SamplerKind::ddim: x = ddim_step(x, t, t_next, score, sched, sampler.eta, z); break;
      }
    } catch (const NumericError& e) {
      throw NumericError("sampler aborted at step " + std::to_string(i) + ": " + e.what());
    }
    if (!x.allFinite()) {
      throw NumericError("sampler aborted at step " + std::to_string(i) + ": non-finite state at t=" +
                         std::to_string(t_next));
    }
    if (keep_states) traj.states.push_back({t_next, x});
  }
  if (!keep_states) traj.states.push_back({grid.end(), x});
  return traj;
}

Trajectory sample(const ScoreField& score, const TimeGrid& grid, const NoiseSchedule& sched,
                  const SamplerConfig& sampler, Eigen::Index dim, std::uint64_t seed, bool record_noise,
                  const std::optional<Vector>& x_start) {
  TrajectoryNoise noise = draw_noise(grid, dim, seed);
  const Vector start = x_start ? *x_start : noise.x_start;
  if (start.size() != dim) throw ShapeError("sample: x_start dimension mismatch");
  Trajectory traj = replay(score, grid, sched, sampler, start, noise.record);
  if (record_noise) traj.noise = std::move(noise.record);
  return traj;
}

Matrix sample_endpoints(const ScoreField& score, const TimeGrid& grid, const NoiseSchedule& sched,
                        const SamplerConfig& sampler, Eigen::Index dim, size_t n, std::uint64_t run_seed) {
  Matrix out(static_cast<Eigen::Index>(n), dim);
  parallel_for(n, [&](size_t i) {
    const TrajectoryNoise noise = draw_noise(grid, dim, stream_seed(run_seed, i));
    const Trajectory traj = replay(score, grid, sched, sampler, noise.x_start, noise.record, false);
    out.row(static_cast<Eigen::Index>(i)) = traj.endpoint().transpose();
  });
  return out;
}

}  // namespace cguide

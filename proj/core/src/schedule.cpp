#include "cguide/schedule.hpp"

#include <cmath>
#include <string>

namespace cguide {

void NoiseSchedule::validate() const {
  if (!(beta_min > 0.0) || !(beta_max > beta_min) || !(T > 0.0)) {
    throw ConfigError("noise schedule requires 0 < beta_min < beta_max and T > 0");
  }
}

double NoiseSchedule::beta(double t) const { return beta_min + t * (beta_max - beta_min); }

double NoiseSchedule::integrated_beta(double t) const {
  return beta_min * t + 0.5 * (beta_max - beta_min) * t * t;
}

double NoiseSchedule::alpha(double t) const { return std::exp(-0.5 * integrated_beta(t)); }

double NoiseSchedule::sigma(double t) const {
  // 1 - alpha^2 = -expm1(-B) keeps precision for small t.
  return std::sqrt(-std::expm1(-integrated_beta(t)));
}

AlphaSigma alpha_sigma(double t, const NoiseSchedule& sched) {
  if (!(t >= 0.0 && t <= sched.T)) {
    throw DomainError("alpha_sigma: t=" + std::to_string(t) + " outside [0, T]");
  }
  return {sched.alpha(t), sched.sigma(t)};
}

Vector perturb(const Vector& x0, double t, const NoiseSchedule& sched, const Vector& noise) {
  require_same_dim(x0, noise, "perturb");
  const auto [a, s] = alpha_sigma(t, sched);
  return a * x0 + s * noise;
}

TimeGrid TimeGrid::uniform(int n_steps, double t_start, double t_end) {
  if (n_steps <= 0) throw DomainError("TimeGrid: n_steps must be positive");
  if (!(t_start > t_end) || t_end < 0.0) throw DomainError("TimeGrid: need t_start > t_end >= 0");
  std::vector<double> times(static_cast<size_t>(n_steps) + 1);
  const double h = (t_start - t_end) / n_steps;
  for (int i = 0; i <= n_steps; ++i) times[static_cast<size_t>(i)] = t_start - i * h;
  times.back() = t_end;
  return TimeGrid(std::move(times));
}

TimeGrid TimeGrid::from_times(std::vector<double> times) {
  if (times.size() < 2) throw DomainError("TimeGrid: need at least two times");
  for (size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] < times[i - 1])) throw DomainError("TimeGrid: times must be strictly decreasing");
  }
  if (times.back() < 0.0) throw DomainError("TimeGrid: negative time");
  return TimeGrid(std::move(times));
}

}  // namespace cguide

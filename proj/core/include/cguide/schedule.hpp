#pragma once

#include "cguide/types.hpp"

#include <vector>

namespace cguide {

/// Variance-preserving noise schedule with linear beta(t):
///   f(x, t) = -beta(t) x / 2,   g(t) = sqrt(beta(t)),
///   alpha_t = exp(-B(t) / 2),   sigma_t^2 = 1 - alpha_t^2,
/// where B(t) = int_0^t beta(s) ds.
struct NoiseSchedule {
  double beta_min = 0.1;
  double beta_max = 20.0;
  double T = 1.0;

  void validate() const;

  double beta(double t) const;
  /// Integrated rate B(t).
  double integrated_beta(double t) const;
  double alpha(double t) const;
  double sigma(double t) const;
};

struct AlphaSigma {
  double alpha;
  double sigma;
};

/// Closed-form perturbation coefficients. Throws DomainError outside [0, T].
AlphaSigma alpha_sigma(double t, const NoiseSchedule& sched);

/// alpha_t * x0 + sigma_t * noise.
Vector perturb(const Vector& x0, double t, const NoiseSchedule& sched, const Vector& noise);

/// Default lower time floor used instead of t = 0.
inline constexpr double kTimeFloor = 1e-5;

/// Strictly decreasing time discretization; times.size() == n_steps + 1.
class TimeGrid {
 public:
  /// Uniformly spaced grid from t_start down to t_end.
  static TimeGrid uniform(int n_steps, double t_start = 1.0, double t_end = kTimeFloor);
  /// Takes an explicit sequence; throws DomainError if not strictly decreasing.
  static TimeGrid from_times(std::vector<double> times);

  int n_steps() const { return static_cast<int>(times_.size()) - 1; }
  double operator[](int i) const { return times_[static_cast<size_t>(i)]; }
  const std::vector<double>& times() const { return times_; }
  double start() const { return times_.front(); }
  double end() const { return times_.back(); }

 private:
  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {}
  std::vector<double> times_;
};

}  // namespace cguide

#include "cguide/density.hpp"

#include "cguide/classifier.hpp"
#include "cguide/sampler.hpp"

#include <cmath>

namespace cguide {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kEscapeNorm = 1e6;

Vector checked(const DriftField& f, const Vector& x, double t) {
  Vector v = f(x, t);
  if (!v.allFinite()) throw NumericError("divergence: non-finite drift evaluation at t=" + std::to_string(t));
  return v;
}
}  // namespace

double log_standard_normal(const Vector& x) {
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + x.squaredNorm());
}

double divergence(const DriftField& drift, const Vector& x, double t, const DivergenceConfig& config, Rng* rng) {
  const Eigen::Index d = x.size();
  if (config.mode == DivergenceConfig::Mode::exact_jacobian) {
    if (d > 8) throw ConfigError("exact divergence supports d <= 8");
    double tr = 0.0;
    Vector xp = x;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double h = 1e-4 * (1.0 + std::abs(x[i]));
      xp[i] = x[i] + h;
      const double fp = checked(drift, xp, t)[i];
      xp[i] = x[i] - h;
      const double fm = checked(drift, xp, t)[i];
      xp[i] = x[i];
      tr += (fp - fm) / (2.0 * h);
    }
    return tr;
  }
  if (!rng) throw ConfigError("hutchinson divergence needs an rng");
  if (config.probes <= 0) throw ConfigError("hutchinson divergence needs probes > 0");
  const double h = 1e-4 * (1.0 + x.cwiseAbs().maxCoeff());
  double acc = 0.0;
  for (int k = 0; k < config.probes; ++k) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng->uniform() < 0.5 ? -1.0 : 1.0;
    const Vector fp = checked(drift, x + h * v, t);
    const Vector fm = checked(drift, x - h * v, t);
    acc += v.dot(fp - fm) / (2.0 * h);
  }
  return acc / config.probes;
}

DensityEstimate log_density_ode(const ScoreField& score, const Vector& x, double t, const NoiseSchedule& sched,
                                const OdeDensityConfig& config,
                                const std::function<double(const Vector&)>& terminal_log_density) {
  if (!(t >= 0.0 && t <= sched.T)) throw DomainError("log_density_ode: t outside [0, T]");
  if (config.n_steps < 16) throw ConfigError("log_density_ode: n_steps must be >= 16");
  const DriftField drift = [&](const Vector& y, double s) { return pf_ode_drift(y, s, score, sched); };
  Rng rng(config.seed);
  const double h = (sched.T - t) / config.n_steps;
  Vector y = x;
  double accumulated = 0.0;
  for (int i = 0; i < config.n_steps; ++i) {
    const double s = t + i * h;
    const double s_next = i + 1 == config.n_steps ? sched.T : s + h;
    const Vector k1 = checked(drift, y, s);
    const double d1 = divergence(drift, y, s, config.divergence, &rng);
    const Vector pred = y + h * k1;
    const Vector k2 = checked(drift, pred, s_next);
    const double d2 = divergence(drift, pred, s_next, config.divergence, &rng);
    y += 0.5 * h * (k1 + k2);
    accumulated += 0.5 * h * (d1 + d2);
    if (!(y.norm() <= kEscapeNorm)) {
      throw NumericError("log_density_ode: trajectory escaped at s=" + std::to_string(s_next));
    }
  }
  DensityEstimate est;
  const double terminal = terminal_log_density ? terminal_log_density(y) : log_standard_normal(y);
  est.log_density = terminal + accumulated;
  est.t = t;
  est.x = x;
  est.x_terminal = y;
  est.n_steps = config.n_steps;
  est.divergence = config.divergence;
  if (!std::isfinite(est.log_density)) throw NumericError("log_density_ode: non-finite estimate");
  return est;
}

DensityEstimate log_density_ode(const ScoreModel& model, const PromptId& prompt, const Vector& x, double t,
                                const OdeDensityConfig& config) {
  std::function<double(const Vector&)> terminal;
  if (config.exact_terminal) {
    const double T = model.schedule().T;
    if (!model.log_density(prompt, x, T)) throw ConfigError("exact terminal density needs a closed-form model");
    terminal = [&model, prompt, T](const Vector& y) { return *model.log_density(prompt, y, T); };
  }
  return log_density_ode(model.field(prompt), x, t, model.schedule(), config, terminal);
}

double lambda_via_ode(const ScoreModel& model, const Contrast& contrast, const Vector& x, double t,
                      const OdeDensityConfig& config) {
  if (contrast.gamma == 0.0) return 0.0;
  const double lp = log_density_ode(model, contrast.positive, x, t, config).log_density;
  const double ln = log_density_ode(model, contrast.negative, x, t, config).log_density;
  return contrast.gamma *
         std::exp(classifier_logits(lp, ln, contrast.gamma, contrast.prior_positive, contrast.prior_negative).log_neg);
}

}  // namespace cguide

#pragma once

#include "cguide/model.hpp"
#include "cguide/sampler.hpp"
#include "cguide/schedule.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cguide {

/// One shared-noise pair: both endpoints consumed the same TrajectoryNoise.
struct PairedRun {
  Vector base_endpoint;
  Vector guided_endpoint;
  Vector displacement;  // guided - base
};

struct DisplacementStats {
  size_t n = 0;
  double mean_l2 = 0.0;
  double se_l2 = 0.0;
  double median_l2 = 0.0;
  double p90_l2 = 0.0;
  Vector mean_abs;     // per coordinate, mean |delta_i|
  Vector mean_signed;  // per coordinate, mean delta_i
  Vector se_signed;    // Monte-Carlo standard error of mean_signed
};

struct SamplingSetup {
  TimeGrid grid = TimeGrid::uniform(1000);
  NoiseSchedule sched;
  SamplerConfig sampler;
  Eigen::Index dim = 1;
};

PairedRun paired_run(const ScoreField& base, const ScoreField& guided, const SamplingSetup& setup,
                     std::uint64_t seed);

/// n shared-noise pairs; pair i uses stream_seed(seed, i).
DisplacementStats paired_displacement(const ScoreField& base, const ScoreField& guided, size_t n,
                                      const SamplingSetup& setup, std::uint64_t seed);

struct SweepPoint {
  double lambda;
  Vector mean;
  Matrix covariance;
  Vector se;  // standard error of each mean coordinate
};

/// Samples n endpoints per lambda with field_for(lambda). Sample i uses the
/// same noise for every lambda. Endpoints are appended to samples when given.
std::vector<SweepPoint> rig_sweep(const std::function<ScoreField(double)>& field_for,
                                  const std::vector<double>& lambdas, size_t n, const SamplingSetup& setup,
                                  std::uint64_t seed, std::vector<Matrix>* samples = nullptr);

struct Moments {
  Vector mean;
  Matrix covariance;  // unbiased
};
Moments sample_moments(const Matrix& samples);

/// V-statistic energy distance 2 E|X - Y| - E|X - X'| - E|Y - Y'| between the
/// rows of a and b. Exactly zero for identical sets. One-dimensional inputs
/// use an O(n log n) sorted path.
double energy_distance(const Matrix& a, const Matrix& b);

/// Energy distances of random relabelings of the pooled sample.
std::vector<double> energy_distance_permutation_null(const Matrix& a, const Matrix& b, int permutations,
                                                     std::uint64_t seed);

/// 2-Wasserstein distance between Gaussians. Throws DomainError for
/// covariances that are not positive definite.
double gaussian_w2(const Vector& mu1, const Matrix& cov1, const Vector& mu2, const Matrix& cov2);

/// log p0(x | y+) - log p0(x | y-).
double contrastive_likelihood_score(const ScoreModel& model, const Vector& x, const PromptId& positive,
                                    const PromptId& negative);

struct MetricReport {
  std::string name;
  double value = 0.0;
  size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<double> half_width;  // 95% bootstrap, only when n >= 30

  nlohmann::json to_json() const;
};

/// 95% percentile-bootstrap half-width of the mean (B resamples); nullopt
/// when fewer than 30 values.
std::optional<double> bootstrap_half_width(const std::vector<double>& values, std::uint64_t seed, int resamples = 1000);

MetricReport mean_metric(std::string name, const std::vector<double>& values, std::uint64_t seed);

}  // namespace cguide

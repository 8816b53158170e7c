#pragma once

#include "cguide/rng.hpp"
#include "cguide/types.hpp"

#include <vector>

namespace cguide {

/// One Gaussian component, stored through the eigendecomposition of its
/// covariance so that the VP-perturbed covariance alpha^2 Sigma + sigma^2 I
/// shares the eigenbasis and needs no refactorization.
class GaussianComponent {
 public:
  GaussianComponent(Vector mean, Matrix cov);
  static GaussianComponent isotropic(Vector mean, double variance = 1.0);

  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  bool is_isotropic() const { return isotropic_; }

  /// log N(x; alpha mu, alpha^2 Sigma + sigma^2 I); optionally writes the
  /// gradient with respect to x.
  double log_density(const Vector& x, double alpha, double sigma, Vector* grad = nullptr) const;

  Vector sample(Rng& rng) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix basis_;        // eigenvectors of cov (columns)
  Vector eigenvalues_;  // > 0
  bool isotropic_ = false;
};

class GaussianMixture {
 public:
  GaussianMixture() = default;
  /// Weights must be positive; they are normalized to sum to one.
  GaussianMixture(std::vector<double> weights, std::vector<GaussianComponent> components);
  static GaussianMixture single(GaussianComponent c);

  Eigen::Index dim() const { return components_.empty() ? 0 : components_.front().dim(); }
  size_t size() const { return components_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<GaussianComponent>& components() const { return components_; }

  /// Exact VP pushforward: component k -> N(alpha mu_k, alpha^2 Sigma_k + sigma^2 I).
  GaussianMixture perturbed(double alpha, double sigma) const;

  /// Log-sum-exp stabilized log-density of the perturbed mixture.
  double log_density(const Vector& x, double alpha = 1.0, double sigma = 0.0) const;
  /// Gradient of log_density; responsibilities are computed in log space.
  Vector score(const Vector& x, double alpha = 1.0, double sigma = 0.0) const;
  /// Both at once.
  double log_density_and_score(const Vector& x, double alpha, double sigma, Vector& score) const;

  Vector sample(Rng& rng) const;
  Matrix sample(size_t n, std::uint64_t seed) const;

  Vector mean() const;
  Matrix covariance() const;

 private:
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<GaussianComponent> components_;
};

}  // namespace cguide

#include "cguide/mixture.hpp"

#include <cmath>
#include <limits>

namespace cguide {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

GaussianComponent::GaussianComponent(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  const Eigen::Index d = mean_.size();
  if (d == 0) throw ConfigError("Gaussian component with zero dimension");
  if (cov_.rows() != d || cov_.cols() != d) throw ShapeError("covariance shape does not match mean");
  if (!mean_.allFinite() || !cov_.allFinite()) throw ConfigError("non-finite Gaussian parameters");
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + cov_.cwiseAbs().maxCoeff())) {
    throw ConfigError("covariance is not symmetric");
  }
  const Matrix off = cov_ - Matrix(cov_.diagonal().asDiagonal());
  const double v0 = cov_(0, 0);
  isotropic_ = off.cwiseAbs().maxCoeff() == 0.0 && (cov_.diagonal().array() == v0).all();
  if (isotropic_) {
    basis_ = Matrix::Identity(d, d);
    eigenvalues_ = Vector::Constant(d, v0);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov_);
    basis_ = eig.eigenvectors();
    eigenvalues_ = eig.eigenvalues();
  }
  if (!(eigenvalues_.minCoeff() > 0.0)) throw ConfigError("covariance is not positive definite");
}

GaussianComponent GaussianComponent::isotropic(Vector mean, double variance) {
  const Eigen::Index d = mean.size();
  return GaussianComponent(std::move(mean), variance * Matrix::Identity(d, d));
}

double GaussianComponent::log_density(const Vector& x, double alpha, double sigma, Vector* grad) const {
  const Eigen::Index d = dim();
  const double s2 = sigma * sigma;
  if (isotropic_) {
    const double var = alpha * alpha * eigenvalues_[0] + s2;
    const Vector r = x - alpha * mean_;
    if (grad) *grad = -r / var;
    return -0.5 * (static_cast<double>(d) * (kLog2Pi + std::log(var)) + r.squaredNorm() / var);
  }
  const Vector var = (alpha * alpha) * eigenvalues_.array() + s2;
  const Vector y = basis_.transpose() * (x - alpha * mean_);
  const Vector w = y.cwiseQuotient(var);
  if (grad) *grad = -(basis_ * w);
  return -0.5 * (static_cast<double>(d) * kLog2Pi + var.array().log().sum() + y.dot(w));
}

Vector GaussianComponent::sample(Rng& rng) const {
  const Vector z = rng.normal_vector(dim());
  if (isotropic_) return mean_ + std::sqrt(eigenvalues_[0]) * z;
  return mean_ + basis_ * eigenvalues_.cwiseSqrt().cwiseProduct(z);
}

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<GaussianComponent> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("mixture needs at least one component");
  if (weights_.size() != components_.size()) throw ShapeError("mixture weights/components size mismatch");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("mixture weights must be positive");
    total += w;
  }
  const Eigen::Index d = components_.front().dim();
  for (const auto& c : components_) {
    if (c.dim() != d) throw ShapeError("mixture components disagree on dimension");
  }
  log_weights_.reserve(weights_.size());
  for (double& w : weights_) {
    w /= total;
    log_weights_.push_back(std::log(w));
  }
}

GaussianMixture GaussianMixture::single(GaussianComponent c) { return GaussianMixture({1.0}, {std::move(c)}); }

GaussianMixture GaussianMixture::perturbed(double alpha, double sigma) const {
  std::vector<GaussianComponent> comps;
  comps.reserve(components_.size());
  for (const auto& c : components_) {
    const Eigen::Index d = c.dim();
    comps.emplace_back(alpha * c.mean(), alpha * alpha * c.cov() + sigma * sigma * Matrix::Identity(d, d));
  }
  return GaussianMixture(weights_, std::move(comps));
}

double GaussianMixture::log_density(const Vector& x, double alpha, double sigma) const {
  if (x.size() != dim()) throw ShapeError("mixture log_density: dimension mismatch");
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(components_.size());
  for (size_t k = 0; k < components_.size(); ++k) {
    terms[k] = log_weights_[k] + components_[k].log_density(x, alpha, sigma);
    m = std::max(m, terms[k]);
  }
  if (!std::isfinite(m)) throw NumericError("mixture log_density: all components underflow");
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - m);
  return m + std::log(acc);
}

double GaussianMixture::log_density_and_score(const Vector& x, double alpha, double sigma, Vector& out) const {
  if (x.size() != dim()) throw ShapeError("mixture score: dimension mismatch");
  if (components_.size() == 1) return components_[0].log_density(x, alpha, sigma, &out);
  std::vector<double> terms(components_.size());
  std::vector<Vector> grads(components_.size());
  double m = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < components_.size(); ++k) {
    terms[k] = log_weights_[k] + components_[k].log_density(x, alpha, sigma, &grads[k]);
    m = std::max(m, terms[k]);
  }
  if (!std::isfinite(m)) throw NumericError("mixture score: all components underflow");
  double acc = 0.0;
  out = Vector::Zero(x.size());
  for (size_t k = 0; k < components_.size(); ++k) {
    const double r = std::exp(terms[k] - m);
    acc += r;
    out += r * grads[k];
  }
  out /= acc;
  return m + std::log(acc);
}

Vector GaussianMixture::score(const Vector& x, double alpha, double sigma) const {
  Vector out;
  log_density_and_score(x, alpha, sigma, out);
  return out;
}

Vector GaussianMixture::sample(Rng& rng) const {
  return components_[rng.categorical(weights_)].sample(rng);
}

Matrix GaussianMixture::sample(size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  Matrix out(static_cast<Eigen::Index>(n), dim());
  for (size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = sample(rng).transpose();
  return out;
}

Vector GaussianMixture::mean() const {
  Vector m = Vector::Zero(dim());
  for (size_t k = 0; k < components_.size(); ++k) m += weights_[k] * components_[k].mean();
  return m;
}

Matrix GaussianMixture::covariance() const {
  const Vector mu = mean();
  Matrix c = Matrix::Zero(dim(), dim());
  for (size_t k = 0; k < components_.size(); ++k) {
    const Vector dm = components_[k].mean() - mu;
    c += weights_[k] * (components_[k].cov() + dm * dm.transpose());
  }
  return c;
}

}  // namespace cguide

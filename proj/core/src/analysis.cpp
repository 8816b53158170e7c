#include "cguide/analysis.hpp"

#include "cguide/parallel.hpp"
#include "cguide/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cguide {

PairedRun paired_run(const ScoreField& base, const ScoreField& guided, const SamplingSetup& setup,
                     std::uint64_t seed) {
  const TrajectoryNoise noise = draw_noise(setup.grid, setup.dim, seed);
  PairedRun run;
  run.base_endpoint = replay(base, setup.grid, setup.sched, setup.sampler, noise.x_start, noise.record, false).endpoint();
  run.guided_endpoint =
      replay(guided, setup.grid, setup.sched, setup.sampler, noise.x_start, noise.record, false).endpoint();
  run.displacement = run.guided_endpoint - run.base_endpoint;
  return run;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

DisplacementStats paired_displacement(const ScoreField& base, const ScoreField& guided, size_t n,
                                      const SamplingSetup& setup, std::uint64_t seed) {
  if (n == 0) throw ConfigError("paired_displacement: n must be positive");
  Matrix deltas(static_cast<Eigen::Index>(n), setup.dim);
  parallel_for(n, [&](size_t i) {
    deltas.row(static_cast<Eigen::Index>(i)) = paired_run(base, guided, setup, stream_seed(seed, i)).displacement.transpose();
  });
  DisplacementStats st;
  st.n = n;
  std::vector<double> l2(n);
  for (size_t i = 0; i < n; ++i) l2[i] = deltas.row(static_cast<Eigen::Index>(i)).norm();
  const double nn = static_cast<double>(n);
  st.mean_l2 = std::accumulate(l2.begin(), l2.end(), 0.0) / nn;
  double var = 0.0;
  for (double v : l2) var += (v - st.mean_l2) * (v - st.mean_l2);
  st.se_l2 = n > 1 ? std::sqrt(var / (nn - 1.0) / nn) : 0.0;
  st.median_l2 = quantile(l2, 0.5);
  st.p90_l2 = quantile(l2, 0.9);
  st.mean_abs = deltas.cwiseAbs().colwise().mean().transpose();
  const Moments m = sample_moments(deltas);
  st.mean_signed = m.mean;
  st.se_signed = n > 1 ? Vector((m.covariance.diagonal() / nn).cwiseSqrt()) : Vector::Zero(setup.dim);
  return st;
}

std::vector<SweepPoint> rig_sweep(const std::function<ScoreField(double)>& field_for,
                                  const std::vector<double>& lambdas, size_t n, const SamplingSetup& setup,
                                  std::uint64_t seed, std::vector<Matrix>* samples) {
  if (lambdas.empty()) throw ConfigError("rig_sweep: empty lambda list");
  if (n < 2) throw ConfigError("rig_sweep: need at least two samples per lambda");
  std::vector<SweepPoint> out;
  for (double lambda : lambdas) {
    if (!std::isfinite(lambda)) throw ConfigError("rig_sweep: non-finite lambda");
    const Matrix ends = sample_endpoints(field_for(lambda), setup.grid, setup.sched, setup.sampler, setup.dim, n, seed);
    const Moments m = sample_moments(ends);
    out.push_back({lambda, m.mean, m.covariance, (m.covariance.diagonal() / static_cast<double>(n)).cwiseSqrt()});
    if (samples) samples->push_back(ends);
  }
  return out;
}

Moments sample_moments(const Matrix& samples) {
  const auto n = samples.rows();
  if (n == 0) throw ConfigError("sample_moments: no samples");
  Moments m;
  m.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - m.mean.transpose();
  m.covariance = n > 1 ? Matrix(centered.transpose() * centered / static_cast<double>(n - 1))
                       : Matrix::Zero(samples.cols(), samples.cols());
  return m;
}

namespace {

// Mean of |a_i - b_j| over all pairs.
double mean_cross_distance(const Matrix& a, const Matrix& b) {
  const auto na = a.rows();
  const auto nb = b.rows();
  if (a.cols() == 1) {
    std::vector<double> sb(b.data(), b.data() + nb);
    std::sort(sb.begin(), sb.end());
    std::vector<double> prefix(static_cast<size_t>(nb) + 1, 0.0);
    for (Eigen::Index j = 0; j < nb; ++j) prefix[static_cast<size_t>(j) + 1] = prefix[static_cast<size_t>(j)] + sb[static_cast<size_t>(j)];
    const double total = prefix.back();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < na; ++i) {
      const double x = a(i, 0);
      const auto k = static_cast<size_t>(std::upper_bound(sb.begin(), sb.end(), x) - sb.begin());
      const double below = x * static_cast<double>(k) - prefix[k];
      const double above = (total - prefix[k]) - x * static_cast<double>(static_cast<size_t>(nb) - k);
      acc += below + above;
    }
    return acc / (static_cast<double>(na) * static_cast<double>(nb));
  }
  std::vector<double> rows(static_cast<size_t>(na));
  parallel_for(static_cast<size_t>(na), [&](size_t i) {
    double s = 0.0;
    const auto ri = a.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index j = 0; j < nb; ++j) s += (ri - b.row(j)).norm();
    rows[i] = s;
  });
  return std::accumulate(rows.begin(), rows.end(), 0.0) / (static_cast<double>(na) * static_cast<double>(nb));
}

}  // namespace

double energy_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw ConfigError("energy_distance: empty sample set");
  if (a.cols() != b.cols()) throw ShapeError("energy_distance: dimension mismatch");
  return 2.0 * mean_cross_distance(a, b) - mean_cross_distance(a, a) - mean_cross_distance(b, b);
}

std::vector<double> energy_distance_permutation_null(const Matrix& a, const Matrix& b, int permutations,
                                                     std::uint64_t seed) {
  if (a.cols() != b.cols()) throw ShapeError("energy_distance: dimension mismatch");
  Matrix pooled(a.rows() + b.rows(), a.cols());
  pooled << a, b;
  std::vector<Eigen::Index> idx(static_cast<size_t>(pooled.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(static_cast<size_t>(permutations));
  for (int p = 0; p < permutations; ++p) {
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    Matrix pa(a.rows(), a.cols()), pb(b.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) pa.row(i) = pooled.row(idx[static_cast<size_t>(i)]);
    for (Eigen::Index i = 0; i < b.rows(); ++i) pb.row(i) = pooled.row(idx[static_cast<size_t>(a.rows() + i)]);
    out.push_back(energy_distance(pa, pb));
  }
  return out;
}

namespace {

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Vector ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

void require_pd(const Matrix& c, const char* name) {
  if (c.rows() != c.cols()) throw ShapeError(std::string("gaussian_w2: ") + name + " is not square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) throw DomainError(std::string("gaussian_w2: ") + name + " is not positive definite");
}

}  // namespace

double gaussian_w2(const Vector& mu1, const Matrix& cov1, const Vector& mu2, const Matrix& cov2) {
  require_same_dim(mu1, mu2, "gaussian_w2");
  if (cov1.rows() != mu1.size() || cov2.rows() != mu2.size()) throw ShapeError("gaussian_w2: covariance shape");
  require_pd(cov1, "cov1");
  require_pd(cov2, "cov2");
  const Matrix s2 = psd_sqrt(cov2);
  const Matrix cross = psd_sqrt(s2 * cov1 * s2);
  const double tr = (cov1 + cov2 - 2.0 * cross).trace();
  return std::sqrt(std::max(0.0, (mu1 - mu2).squaredNorm() + tr));
}

double contrastive_likelihood_score(const ScoreModel& model, const Vector& x, const PromptId& positive,
                                    const PromptId& negative) {
  if (positive == negative) return 0.0;
  const auto lp = model.log_density(positive, x, 0.0);
  const auto ln = model.log_density(negative, x, 0.0);
  if (!lp || !ln) throw ConfigError("contrastive likelihood score needs closed-form log-densities");
  return *lp - *ln;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j{{"name", name}, {"value", value}, {"n", n}, {"seed", seed}};
  j["half_width"] = half_width ? nlohmann::json(*half_width) : nlohmann::json(nullptr);
  return j;
}

std::optional<double> bootstrap_half_width(const std::vector<double>& values, std::uint64_t seed, int resamples) {
  if (values.size() < 30) return std::nullopt;
  Rng rng(seed);
  const size_t n = values.size();
  std::vector<double> means(static_cast<size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += values[static_cast<size_t>(rng.uniform() * static_cast<double>(n)) % n];
    m = s / static_cast<double>(n);
  }
  return 0.5 * (quantile(means, 0.975) - quantile(means, 0.025));
}

MetricReport mean_metric(std::string name, const std::vector<double>& values, std::uint64_t seed) {
  MetricReport r;
  r.name = std::move(name);
  r.n = values.size();
  r.seed = seed;
  r.value = values.empty() ? 0.0 : std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  r.half_width = bootstrap_half_width(values, seed);
  return r;
}

}  // namespace cguide

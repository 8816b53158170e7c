#include "cguide/score_net.hpp"

#include "cguide/rng.hpp"

#include <cmath>
#include <numbers>

namespace cguide {

namespace {

Matrix silu(const Matrix& a) { return a.array() / (1.0 + (-a.array()).exp()); }

Matrix silu_grad(const Matrix& a) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-a.array()).exp());
  return (s * (1.0 + a.array() * (1.0 - s))).matrix();
}

Matrix init_dense(Eigen::Index rows, Eigen::Index cols, double gain, Rng& rng) {
  Matrix w(rows, cols);
  const double scale = gain / std::sqrt(static_cast<double>(cols));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
  return w;
}

}  // namespace

LearnedScoreModel::LearnedScoreModel(Eigen::Index dim, std::vector<std::string> vocabulary,
                                     const NoiseSchedule& sched, std::uint64_t init_seed)
    : dim_(dim), vocab_(std::move(vocabulary)), sched_(sched) {
  if (dim_ <= 0) throw ConfigError("score network needs a positive dimension");
  std::sort(vocab_.begin(), vocab_.end());
  vocab_.erase(std::unique(vocab_.begin(), vocab_.end()), vocab_.end());
  for (size_t i = 0; i < vocab_.size(); ++i) token_index_[vocab_[i]] = static_cast<Eigen::Index>(i);
  Rng rng(init_seed);
  const auto v = static_cast<Eigen::Index>(vocab_.size());
  embed_ = init_dense(kTokenFeatures, std::max<Eigen::Index>(v, 1), 1.0, rng);
  if (v == 0) embed_.resize(kTokenFeatures, 0);
  const Eigen::Index in = dim_ + kTimeFeatures + kTokenFeatures;
  const Eigen::Index sizes[] = {in, kHidden, kHidden, kHidden, dim_};
  for (int l = 0; l < 4; ++l) {
    const double gain = l == 3 ? 0.1 : std::sqrt(2.0);
    weights_.push_back(init_dense(sizes[l + 1], sizes[l], gain, rng));
    biases_.push_back(Vector::Zero(sizes[l + 1]));
  }
}

bool LearnedScoreModel::has_prompt(const PromptId& prompt) const {
  for (const auto& tok : prompt.tokens()) {
    if (!token_index_.count(tok)) return false;
  }
  return true;
}

Vector LearnedScoreModel::token_counts(const PromptId& prompt) const {
  Vector m = Vector::Zero(static_cast<Eigen::Index>(vocab_.size()));
  for (const auto& tok : prompt.tokens()) {
    auto it = token_index_.find(tok);
    if (it == token_index_.end()) throw LookupError("token '" + tok + "' not in the model vocabulary");
    m[it->second] += 1.0;
  }
  return m;
}

Matrix LearnedScoreModel::input_features(const Batch& batch) const {
  const Eigen::Index n = batch.x.cols();
  Matrix f(dim_ + kTimeFeatures + kTokenFeatures, n);
  f.topRows(dim_) = batch.x;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int k = 0; k < kTimeFeatures / 2; ++k) {
      const double w = std::numbers::pi * std::ldexp(1.0, k) * batch.t[j];
      f(dim_ + 2 * k, j) = std::sin(w);
      f(dim_ + 2 * k + 1, j) = std::cos(w);
    }
  }
  if (embed_.cols() > 0) {
    f.bottomRows(kTokenFeatures) = embed_ * batch.token_counts;
  } else {
    f.bottomRows(kTokenFeatures).setZero();
  }
  return f;
}

Matrix LearnedScoreModel::forward(const Batch& batch) const {
  Matrix h = input_features(batch);
  for (size_t l = 0; l < weights_.size(); ++l) {
    Matrix a = (weights_[l] * h).colwise() + biases_[l];
    h = l + 1 < weights_.size() ? silu(a) : a;
  }
  return h;
}

double LearnedScoreModel::loss_and_gradient(const Batch& batch, const Matrix& target, Vector& grads) const {
  const Eigen::Index n = batch.x.cols();
  std::vector<Matrix> acts;  // inputs to each layer
  std::vector<Matrix> pre;   // pre-activations
  acts.push_back(input_features(batch));
  for (size_t l = 0; l < weights_.size(); ++l) {
    pre.push_back((weights_[l] * acts.back()).colwise() + biases_[l]);
    if (l + 1 < weights_.size()) acts.push_back(silu(pre.back()));
  }
  const Matrix diff = pre.back() - target;
  const double loss = diff.squaredNorm() / static_cast<double>(n);

  std::vector<Matrix> dw(weights_.size());
  std::vector<Vector> db(weights_.size());
  Matrix delta = 2.0 * diff / static_cast<double>(n);
  for (size_t l = weights_.size(); l-- > 0;) {
    dw[l] = delta * acts[l].transpose();
    db[l] = delta.rowwise().sum();
    Matrix up = weights_[l].transpose() * delta;
    if (l > 0) {
      delta = up.cwiseProduct(silu_grad(pre[l - 1]));
    } else {
      delta = std::move(up);
    }
  }
  // delta now holds d loss / d features.
  Matrix d_embed = Matrix::Zero(embed_.rows(), embed_.cols());
  if (embed_.cols() > 0) d_embed = delta.bottomRows(kTokenFeatures) * batch.token_counts.transpose();

  grads.resize(parameters().size());
  Eigen::Index off = 0;
  auto put = [&](const auto& m) {
    grads.segment(off, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
    off += m.size();
  };
  put(d_embed);
  for (size_t l = 0; l < weights_.size(); ++l) {
    put(dw[l]);
    put(db[l]);
  }
  return loss;
}

Vector LearnedScoreModel::predict_noise(const PromptId& prompt, const Vector& x, double t) const {
  if (x.size() != dim_) throw ShapeError("score network: dimension mismatch");
  Batch b{x, Vector::Constant(1, t), token_counts(prompt)};
  return forward(b).col(0);
}

Vector LearnedScoreModel::score(const PromptId& prompt, const Vector& x, double t) const {
  return -predict_noise(prompt, x, t) / sched_.sigma(t);
}

Vector LearnedScoreModel::parameters() const {
  Eigen::Index total = embed_.size();
  for (size_t l = 0; l < weights_.size(); ++l) total += weights_[l].size() + biases_[l].size();
  Vector flat(total);
  Eigen::Index off = 0;
  auto put = [&](const auto& m) {
    flat.segment(off, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
    off += m.size();
  };
  put(embed_);
  for (size_t l = 0; l < weights_.size(); ++l) {
    put(weights_[l]);
    put(biases_[l]);
  }
  return flat;
}

void LearnedScoreModel::set_parameters(const Vector& flat) {
  if (flat.size() != parameters().size()) throw ShapeError("parameter vector has the wrong length");
  Eigen::Index off = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Vector>(m.data(), m.size()) = flat.segment(off, m.size());
    off += m.size();
  };
  take(embed_);
  for (size_t l = 0; l < weights_.size(); ++l) {
    take(weights_[l]);
    take(biases_[l]);
  }
}

nlohmann::json LearnedScoreModel::to_json() const {
  const Vector p = parameters();
  return {{"dimension", dim_},
          {"vocabulary", vocab_},
          {"schedule", {{"beta_min", sched_.beta_min}, {"beta_max", sched_.beta_max}, {"T", sched_.T}}},
          {"train_steps", log_.steps},
          {"loss_curve", log_.loss_curve},
          {"parameters", std::vector<double>(p.data(), p.data() + p.size())}};
}

LearnedScoreModel LearnedScoreModel::from_json(const nlohmann::json& j) {
  NoiseSchedule sched;
  sched.beta_min = j.at("schedule").at("beta_min").get<double>();
  sched.beta_max = j.at("schedule").at("beta_max").get<double>();
  sched.T = j.at("schedule").at("T").get<double>();
  LearnedScoreModel m(j.at("dimension").get<Eigen::Index>(), j.at("vocabulary").get<std::vector<std::string>>(),
                      sched, 0);
  const auto p = j.at("parameters").get<std::vector<double>>();
  m.set_parameters(Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size())));
  m.log_.steps = j.value("train_steps", 0);
  m.log_.loss_curve = j.value("loss_curve", std::vector<double>{});
  return m;
}

namespace {

struct DataSource {
  const GaussianMixture* mixture;
  PromptId input;
};

void run_training(LearnedScoreModel& model, const std::vector<DataSource>& sources, const TrainConfig& config,
                  std::uint64_t seed) {
  if (config.steps <= 0) return;
  if (sources.empty()) throw ConfigError("training needs at least one prompt");
  const NoiseSchedule& sched = model.schedule();
  const Eigen::Index d = model.dim();
  const auto v = static_cast<Eigen::Index>(model.vocabulary().size());
  std::vector<Vector> counts;
  for (const auto& s : sources) counts.push_back(model.token_counts(s.input));

  Rng rng(seed);
  Vector params = model.parameters();
  Vector ema = params;
  Vector m1 = Vector::Zero(params.size());
  Vector m2 = Vector::Zero(params.size());
  Vector grads;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double window = 0.0;
  int window_n = 0;

  LearnedScoreModel::Batch batch;
  batch.x.resize(d, config.batch);
  batch.t.resize(config.batch);
  batch.token_counts.resize(v, config.batch);
  Matrix target(d, config.batch);

  for (int step = 0; step < config.steps; ++step) {
    for (int j = 0; j < config.batch; ++j) {
      const size_t k = static_cast<size_t>(rng.uniform() * static_cast<double>(sources.size())) % sources.size();
      const Vector x0 = sources[k].mixture->sample(rng);
      const double t = config.t_min + (sched.T - config.t_min) * rng.uniform();
      const Vector z = rng.normal_vector(d);
      batch.x.col(j) = sched.alpha(t) * x0 + sched.sigma(t) * z;
      batch.t[j] = t;
      batch.token_counts.col(j) = counts[k];
      target.col(j) = z;
    }
    const double loss = model.loss_and_gradient(batch, target, grads);
    if (!std::isfinite(loss) || !grads.allFinite()) {
      throw NumericError("DSM training diverged at step " + std::to_string(step));
    }
    const double progress = static_cast<double>(step) / config.steps;
    const double lr = config.learning_rate *
                      (config.final_lr_fraction +
                       (1.0 - config.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    m1 = kBeta1 * m1 + (1.0 - kBeta1) * grads;
    m2 = kBeta2 * m2 + (1.0 - kBeta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(kBeta1, step + 1);
    const double c2 = 1.0 - std::pow(kBeta2, step + 1);
    params.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kEps);
    model.set_parameters(params);
    const double decay = std::min(config.ema_decay, (1.0 + step) / (10.0 + step));
    ema = decay * ema + (1.0 - decay) * params;

    window += loss;
    ++window_n;
    if (window_n == config.log_every || step + 1 == config.steps) {
      model.log().loss_curve.push_back(window / window_n);
      window = 0.0;
      window_n = 0;
    }
  }
  model.set_parameters(ema);
  model.log().steps += config.steps;
}

}  // namespace

LearnedScoreModel train_dsm(const World& world, const std::vector<PromptId>& prompts, const NoiseSchedule& sched,
                            const TrainConfig& config, std::uint64_t seed) {
  if (config.steps < 0) throw ConfigError("training budget must be non-negative");
  std::vector<std::string> vocab;
  std::vector<DataSource> sources;
  for (const auto& p : prompts) {
    sources.push_back({&world.mixture(p), p});
    for (const auto& tok : p.tokens()) vocab.push_back(tok);
  }
  LearnedScoreModel model(world.dim(), vocab, sched, mix64(seed));
  run_training(model, sources, config, seed);
  return model;
}

LearnedScoreModel finetune_expert(const LearnedScoreModel& base, const World& world, const PromptId& domain_prompt,
                                  const TrainConfig& config, std::uint64_t seed) {
  if (config.steps < 0) throw ConfigError("training budget must be non-negative");
  LearnedScoreModel expert = base;
  run_training(expert, {{&world.mixture(domain_prompt), PromptId::empty()}}, config, seed);
  return expert;
}

double score_rms_error(const ScoreModel& model, const PromptId& model_prompt, const World& world,
                       const PromptId& world_prompt, const NoiseSchedule& sched, size_t n, std::uint64_t seed,
                       double t_lo, double t_hi) {
  Rng rng(seed);
  const GaussianMixture& mix = world.mixture(world_prompt);
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = t_lo + (t_hi - t_lo) * rng.uniform();
    const Vector x0 = mix.sample(rng);
    const Vector x = sched.alpha(t) * x0 + sched.sigma(t) * rng.normal_vector(world.dim());
    const Vector err = model.score(model_prompt, x, t) - score(world_prompt, x, t, world, sched);
    acc += err.squaredNorm();
  }
  return std::sqrt(acc / (static_cast<double>(n) * static_cast<double>(world.dim())));
}

}  // namespace cguide

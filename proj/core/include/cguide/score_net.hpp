#pragma once

#include "cguide/model.hpp"
#include "cguide/schedule.hpp"
#include "cguide/world.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace cguide {

struct TrainConfig {
  int steps = 20000;
  int batch = 256;
  double learning_rate = 2e-3;
  double final_lr_fraction = 0.02;  // cosine decay floor
  double ema_decay = 0.999;
  double t_min = 1e-3;              // training times ~ U[t_min, T]
  int log_every = 100;
};

struct TrainLog {
  int steps = 0;
  std::vector<double> loss_curve;  // mean loss over each log window
};

/// Feed-forward noise predictor eps(x, t, prompt) with three SiLU hidden
/// layers. Inputs: x, a sinusoidal embedding of t, and the sum of learned
/// token embeddings (zero for the empty prompt). The score is
/// -eps / sigma_t.
class LearnedScoreModel final : public ScoreModel {
 public:
  static constexpr int kHidden = 64;
  static constexpr int kTimeFeatures = 16;
  static constexpr int kTokenFeatures = 16;

  LearnedScoreModel(Eigen::Index dim, std::vector<std::string> vocabulary, const NoiseSchedule& sched,
                    std::uint64_t init_seed);

  Eigen::Index dim() const override { return dim_; }
  bool has_prompt(const PromptId& prompt) const override;
  Vector score(const PromptId& prompt, const Vector& x, double t) const override;
  Vector predict_noise(const PromptId& prompt, const Vector& x, double t) const;

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const NoiseSchedule& schedule() const override { return sched_; }
  const TrainLog& log() const { return log_; }
  TrainLog& log() { return log_; }

  /// Flat copy of all parameters (for comparisons and serialization).
  Vector parameters() const;
  void set_parameters(const Vector& flat);
  bool parameters_finite() const { return parameters().allFinite(); }

  nlohmann::json to_json() const;
  static LearnedScoreModel from_json(const nlohmann::json& j);

  // Batched forward/backward used by the trainer. Columns are samples.
  struct Batch {
    Matrix x;            // d x n
    Vector t;            // n
    Matrix token_counts; // vocab x n multi-hot
  };
  Matrix forward(const Batch& batch) const;
  /// Returns the mean squared error against target and accumulates gradients
  /// into grads (same layout as parameters()).
  double loss_and_gradient(const Batch& batch, const Matrix& target, Vector& grads) const;

  Vector token_counts(const PromptId& prompt) const;

 private:
  Matrix input_features(const Batch& batch) const;

  Eigen::Index dim_;
  std::vector<std::string> vocab_;
  std::map<std::string, Eigen::Index> token_index_;
  NoiseSchedule sched_;
  // Parameters: token table, then (W, b) for four dense layers.
  Matrix embed_;  // kTokenFeatures x vocab
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  TrainLog log_;
};

/// Denoising score matching over the given prompts (the empty prompt may be
/// included; its data come from the world's unconditional mixture). Minimizes
/// E || eps(x_t, t, y) - z ||^2, the sigma_t^2-weighted form of
/// E || s(x_t, t, y) + z / sigma_t ||^2. Throws NumericError on a non-finite loss.
LearnedScoreModel train_dsm(const World& world, const std::vector<PromptId>& prompts, const NoiseSchedule& sched,
                            const TrainConfig& config, std::uint64_t seed);

/// Continues training a copy of base on one prompt's data with the empty
/// prompt as network input, yielding an unconditional domain expert.
LearnedScoreModel finetune_expert(const LearnedScoreModel& base, const World& world, const PromptId& domain_prompt,
                                  const TrainConfig& config, std::uint64_t seed);

/// Root-mean-square over all coordinates of s_model(x, t) - s_exact(x, t),
/// with x ~ p_t(prompt) and t ~ U[t_lo, t_hi].
double score_rms_error(const ScoreModel& model, const PromptId& model_prompt, const World& world,
                       const PromptId& world_prompt, const NoiseSchedule& sched, size_t n, std::uint64_t seed,
                       double t_lo = 0.1, double t_hi = 0.9);

}  // namespace cguide

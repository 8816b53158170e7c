#pragma once

#include "cguide/analysis.hpp"
#include "cguide/guidance.hpp"
#include "cguide/score_net.hpp"

#include <nlohmann/json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace cguide {

struct ExpertConfig {
  PromptId domain{"face"};
  PromptId positive{"photo", "glasses"};
  PromptId negative{"photo", "noglasses"};
  double lambda = 0.25;  // contrastive strength; the CFG and negative arms use tau = lambda
  size_t n = 2000;
  int steps = 500;
  SamplerConfig sampler;
  std::uint64_t seed = 7;

  nlohmann::json to_json() const;
  static ExpertConfig from_json(const nlohmann::json& j, const std::string& path = "expert");
};

struct ExpertArm {
  std::string name;
  GuidanceSpec guidance;
  Matrix samples;
  MetricReport domain_fit;     // energy distance to domain samples (lower is better)
  MetricReport concept_score;  // mean log p0(x|y+) - log p0(x|y-) (higher is better)
};

struct ExpertReport {
  std::vector<ExpertArm> arms;  // expert, expert+cfg, expert+negative, expert+contrastive
  Matrix domain_reference;

  const ExpertArm& arm(const std::string& name) const;
  /// Contrastive arm has the highest concept score of all arms and the lowest
  /// domain-fit distance among the three text-guided arms.
  bool contrastive_wins() const;
  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
};

/// Samples the four arms with shared noise: every arm's sample i uses
/// stream_seed(seed, i). Concept scores come from the world's closed form.
ExpertReport run_expert_guidance(const ScoreModel& generalist, const ScoreField& expert, const World& world,
                                 const ExpertConfig& config);

struct LearnedExpertReport {
  std::vector<std::pair<std::string, double>> generalist_rms;  // per trained prompt
  double expert_rms = 0.0;
  double max_rms() const;
  ExpertReport report;
  nlohmann::json to_json() const;
};

/// Trains a generalist over every registered prompt and the empty prompt,
/// fine-tunes a copy on the domain prompt as an unconditional expert, checks
/// both against the analytic scores and runs the four arms with the networks.
LearnedExpertReport run_learned_expert(const World& world, const ExpertConfig& config, const TrainConfig& train,
                                       std::uint64_t train_seed);

}  // namespace cguide

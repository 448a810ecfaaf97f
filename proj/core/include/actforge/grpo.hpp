#pragma once

// Group-relative policy optimization over finite response sets.
//
// For each prompt a group of G responses is sampled from the snapshot
// theta_old. Rewards are standardized within the group,
//
//   A_g = (r_g - mean(r)) / (std_pop(r) + eps),
//
// and the loss is
//
//   L(theta) = -mean_{prompts, g} min(rho_g A_g, clip(rho_g, 1-eps_c, 1+eps_c) A_g)
//              + beta * mean_{prompts} KL(pi_theta || pi_ref),
//
// with rho_g = pi_theta(y_g) / pi_old(y_g). The KL is exact over the
// response set.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actforge/optim.hpp"
#include "actforge/policy.hpp"
#include "actforge/reward.hpp"

namespace actforge::grpo {

inline constexpr double kMaxImportanceRatio = 1e6;

struct GrpoConfig {
  int group_size = 8;
  double clip_eps = 0.2;
  double kl_coeff = 0.0;
  double advantage_eps = 1e-8;
  int inner_epochs = 1;
  double learning_rate = 0.05;
  optim::Schedule lr_schedule = optim::Schedule::Cosine;
  double warmup_ratio = 0.1;
  int max_epochs = 3;
  int batch_size = 64;
  double temperature = 1.0;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // pipeline writes a checkpoint every N iterations; 0 => off

  /// Throws ConfigError.
  void validate() const;
};

struct GroupMember {
  std::size_t response_index = 0;
  double old_logprob = 0.0;
};

struct GroupBatch {
  std::shared_ptr<const policy::EncodedPrompt> prompt;
  std::vector<GroupMember> responses;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::string expert_action;
};

std::vector<double> group_advantages(std::span<const double> rewards, double eps);

/// exp(new - old), clamped to kMaxImportanceRatio with a logged warning.
double importance_ratio(double new_logprob, double old_logprob);

double clipped_term(double ratio, double advantage, double clip_eps);

double kl_exact(const policy::PolicyParams& params, const policy::PolicyParams& ref,
                const policy::EncodedPrompt& prompt, double temperature);
double kl_exact(const policy::PolicyParams& params, const policy::PolicyParams& ref,
                const policy::PromptSpec& prompt, double temperature);

struct Objective {
  double value = 0.0;
  std::vector<double> grad;
  double surrogate = 0.0;      // mean clipped term (before the sign flip)
  double kl = 0.0;             // mean exact KL over prompts
  double clip_fraction = 0.0;  // members whose clipped branch zeroes the gradient
};

/// Loss value and exact gradient. Old log-probabilities come from the batch.
Objective grpo_objective(const policy::PolicyParams& params, const policy::PolicyParams& ref,
                         std::span<const GroupBatch> batch, const GrpoConfig& config);

struct StepStats {
  double mean_reward = 0.0;
  double mean_abs_adv = 0.0;
  double clip_fraction = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
  double objective = 0.0;
};

/// One Adam update on the objective at learning rate `lr`.
std::pair<policy::PolicyParams, StepStats> grpo_step(const policy::PolicyParams& params,
                                                     const policy::PolicyParams& ref,
                                                     std::span<const GroupBatch> batch, const GrpoConfig& config,
                                                     optim::Adam& optimizer, double lr);

/// A training prompt with everything the reward needs.
struct TrainingPrompt {
  std::shared_ptr<const policy::EncodedPrompt> prompt;
  std::string expert_action;
  std::vector<std::string> admissible;
};

using RewardAdapter = std::function<reward::RewardBreakdown(const policy::Response&, const TrainingPrompt&)>;

/// Scores with reward::score against the prompt's expert and admissible set.
RewardAdapter make_reward_adapter(bool adm_enabled);

/// Samples a group for one prompt from `old_params` and fills rewards and
/// advantages.
GroupBatch sample_batch(const policy::PolicyParams& old_params, const TrainingPrompt& prompt,
                        const RewardAdapter& reward, const GrpoConfig& config, std::uint64_t seed);

struct HistoryRow {
  int iteration = 0;
  double mean_reward = 0.0;
  double mean_abs_adv = 0.0;
  double clip_fraction = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  policy::PolicyParams params;
  std::vector<HistoryRow> history;

  /// Mean of mean_reward over the last `window` iterations.
  double final_mean_reward(std::size_t window = 10) const;
};

using IterationCallback = std::function<void(int iteration, const policy::PolicyParams&)>;

/// Runs max_epochs passes over `prompts` in shuffled mini-batches. Each
/// batch is sampled from the current snapshot (which becomes theta_old),
/// then optimized for inner_epochs Adam steps. pi_ref is the entry
/// snapshot. Optimizer state starts fresh.
TrainResult train_grpo(const policy::PolicyParams& params, const std::vector<TrainingPrompt>& prompts,
                       const RewardAdapter& reward, const GrpoConfig& config,
                       const IterationCallback& on_iteration = {});

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

}  // namespace actforge::grpo

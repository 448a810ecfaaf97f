#pragma once

// Imitation learning and the staged pipelines:
//
//   il       : imitation on expert steps
//   rl       : GRPO action stage
//   act      : GRPO critic stage only
//   il-act   : critic stage, then imitation
//   rl-act   : critic stage, then GRPO action stage
//
// plus "none", the untrained uniform policy used as the no-training row.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "actforge/actdata.hpp"
#include "actforge/grpo.hpp"
#include "actforge/optim.hpp"
#include "actforge/policy.hpp"
#include "actforge/textenv.hpp"

namespace actforge::trainers {

struct IlConfig {
  double learning_rate = 0.05;
  int epochs = 3;
  int batch_size = 64;
  optim::Schedule lr_schedule = optim::Schedule::Cosine;
  double warmup_ratio = 0.1;
  double temperature = 1.0;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IlExample {
  std::shared_ptr<const policy::EncodedPrompt> prompt;
  std::size_t expert_index = 0;
};

/// ACTION-mode prompts with the tagged expert response located. Throws
/// DataError if an expert action is missing from its response set.
std::vector<IlExample> encode_il(const textenv::ExpertDataset& expert, std::size_t dim);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// loss = -mean log pi(expert | context), with its exact gradient.
LossAndGrad il_loss_and_grad(const policy::PolicyParams& params, std::span<const IlExample> batch,
                             double temperature = 1.0);

struct IlHistoryRow {
  int iteration = 0;
  int epoch = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
};

struct IlResult {
  policy::PolicyParams params;
  std::vector<IlHistoryRow> history;
  double initial_loss = 0.0;  // over the whole dataset, before training
  double final_loss = 0.0;    // over the whole dataset, after training
};

/// Mini-batch Adam over shuffled records. Throws PreconditionError on an
/// empty dataset.
IlResult train_il(const policy::PolicyParams& params, const textenv::ExpertDataset& expert, const IlConfig& config);

void write_il_history_csv(const std::vector<IlHistoryRow>& history, const std::string& path);

struct StageResult {
  policy::PolicyParams params;
  std::vector<grpo::HistoryRow> history;
  double final_mean_reward = 0.0;
};

std::vector<grpo::TrainingPrompt> critic_prompts(const std::vector<actdata::CriticExample>& critic, std::size_t dim);
std::vector<grpo::TrainingPrompt> action_prompts(const textenv::ExpertDataset& expert, std::size_t dim);

/// GRPO on CRITIC prompts, rewarded against a_plus.
StageResult run_act_stage(const policy::PolicyParams& params, const std::vector<actdata::CriticExample>& critic,
                          const grpo::GrpoConfig& config, bool adm_enabled,
                          const grpo::IterationCallback& on_iteration = {});

/// GRPO on ACTION prompts, rewarded against each record's expert action.
StageResult run_rl_action_stage(const policy::PolicyParams& params, const textenv::ExpertDataset& expert,
                                const grpo::GrpoConfig& config, bool adm_enabled,
                                const grpo::IterationCallback& on_iteration = {});

enum class Variant { None, IL, RL, ActOnly, IlWithAct, RlWithAct };

std::string_view to_string(Variant v);
/// Accepts none | il | rl | act | il-act | rl-act.
Variant parse_variant(std::string_view s);
bool uses_act(Variant v);

struct EvalSettings {
  bool enabled = true;
  int id_episodes = 140;
  int ood_episodes = 134;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int max_steps = 0;  // 0 => the registry's max_steps
};

struct PipelineConfig {
  Variant variant = Variant::IL;
  textenv::EnvKind env = textenv::EnvKind::GridHouse;
  std::string env_config;   // registry JSON; empty => the generator's seed-0 registry
  std::string expert_path;  // empty => generated into output_dir
  std::string critic_path;  // empty => built into output_dir when needed
  int expert_tasks = 1000;
  int critic_k = 1;
  double critic_temperature = 1.0;
  grpo::GrpoConfig act;
  grpo::GrpoConfig rl;
  IlConfig il;
  std::size_t dim = policy::kDefaultDim;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  EvalSettings eval;

  void validate() const;
};

/// Reads a pipeline JSON file and applies `overrides` ("dotted.key=value";
/// the value is parsed as JSON when possible, else taken as a string).
PipelineConfig load_pipeline_config(const std::string& path, const std::vector<std::string>& overrides = {});
PipelineConfig pipeline_config_from_json_text(const std::string& text, const std::vector<std::string>& overrides = {});
std::string pipeline_config_to_json_text(const PipelineConfig& config);

struct StageArtifacts {
  std::string stage;  // "act", "il", "rl", "init"
  std::string checkpoint;
  std::string history;
};

struct RunArtifacts {
  std::string output_dir;
  std::vector<StageArtifacts> stages;
  std::string expert_path;
  std::string critic_path;
  std::string report;  // empty when evaluation is disabled
  std::string manifest;

  const std::string& final_checkpoint() const { return stages.back().checkpoint; }
};

/// Runs the variant's stages in order, writing a checkpoint and history
/// after each (and <stage>/iter_NNNNNN.bin every checkpoint_every GRPO
/// iterations when that is set). A failing stage aborts with an error naming the stage;
/// artifacts of earlier stages stay on disk.
RunArtifacts run_pipeline(const PipelineConfig& config);

}  // namespace actforge::trainers

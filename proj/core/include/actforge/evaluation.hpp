#pragma once

// Evaluation: episode success on ID/OOD splits, critic selection accuracy,
// offline next-action accuracy, and report files.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "actforge/actdata.hpp"
#include "actforge/policy.hpp"
#include "actforge/textenv.hpp"

namespace actforge::evaluation {

struct StepTrace {
  textenv::Context context;
  std::string action;  // empty for a MALFORMED choice
  std::string observation;
};

struct EpisodeTrace {
  std::string task_id;
  std::string layout_id;
  bool success = false;
  std::vector<StepTrace> steps;
};

struct SuccessResult {
  double success_rate = 0.0;
  int successes = 0;
  int episodes = 0;
  std::vector<EpisodeTrace> traces;
};

/// Chooses an action for the current context; an empty string is a
/// malformed (untagged) output.
using AgentFn = std::function<std::string(const textenv::Context&, const textenv::WorldState&)>;

/// Greedy ACTION-mode agent: first response with the maximal logit.
AgentFn greedy_agent(const policy::PolicyParams& params);

/// The scripted expert as an agent.
AgentFn oracle_agent();

/// Rolls `episodes` episodes on tasks of `split`, visiting a seeded
/// permutation of the split's tasks and cycling when episodes exceed it.
/// max_steps <= 0 uses the registry value. Throws PreconditionError if
/// episodes < 1 or the split has no tasks.
SuccessResult evaluate_success(const AgentFn& agent, const textenv::EnvConfig& cfg, textenv::Split split,
                               int episodes, int max_steps, std::uint64_t seed);
SuccessResult evaluate_success(const policy::PolicyParams& params, const textenv::EnvConfig& cfg,
                               textenv::Split split, int episodes, int max_steps, std::uint64_t seed);

/// The action picked for a CRITIC prompt; empty for MALFORMED.
using CriticChooser = std::function<std::string(const policy::PromptSpec&)>;

/// Fraction of examples whose greedy choice equals a_plus after
/// normalization. `flip_bits` evaluates with every permutation bit inverted.
double evaluate_critic_accuracy(const CriticChooser& chooser, const std::vector<actdata::CriticExample>& heldout,
                                bool flip_bits = false);
double evaluate_critic_accuracy(const policy::PolicyParams& params,
                                const std::vector<actdata::CriticExample>& heldout, bool flip_bits = false);

/// Mean of 1/|response set| over the examples: the hit rate of a uniformly
/// random pick.
double critic_chance_rate(const std::vector<actdata::CriticExample>& heldout);

/// Fraction of records whose greedy ACTION-mode response is the expert
/// action. Throws DataError("no evaluable records") when empty.
double evaluate_next_action(const policy::PolicyParams& params, const textenv::ExpertDataset& heldout);

/// Throws DataError if any OOD layout appears among the dataset's tasks.
void check_split_hygiene(const textenv::EnvConfig& cfg, const textenv::ExpertDataset& training);

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<double> id_success_rate;
  std::optional<double> ood_success_rate;
  int id_successes = 0;
  int id_episodes = 0;
  int ood_successes = 0;
  int ood_episodes = 0;

  bool operator==(const SeedResult&) const = default;
};

struct EvalReport {
  std::string variant;
  std::string env;
  std::optional<double> id_success_rate;   // mean over seeds
  std::optional<double> ood_success_rate;
  std::optional<double> id_success_sd;     // population sd over seeds
  std::optional<double> ood_success_sd;
  std::optional<double> critic_accuracy;
  std::optional<double> next_action_accuracy;
  int episodes = 0;  // all episodes, every seed and split
  std::vector<std::uint64_t> seeds;
  std::vector<SeedResult> per_seed;

  bool operator==(const EvalReport&) const = default;
};

/// Fills the aggregate fields of `report` from its per_seed entries.
void aggregate(EvalReport& report);

std::string report_to_json_text(const EvalReport& report);
EvalReport report_from_json_text(const std::string& text);

/// One evaluated model: the report and its traces keyed by file stem
/// (for example "id-seed1").
struct EvalRun {
  EvalReport report;
  std::map<std::string, std::vector<EpisodeTrace>> traces;
};

/// Evaluates `params` on the requested splits for each seed.
EvalRun evaluate_model(const policy::PolicyParams& params, const textenv::EnvConfig& cfg, const std::string& variant,
                       bool id, bool ood, int id_episodes, int ood_episodes, const std::vector<std::uint64_t>& seeds,
                       int max_steps);

/// Writes <out_dir>/report.json (all reports), <out_dir>/comparison.csv
/// (one row per report) and <out_dir>/traces/<variant>/<key>.jsonl.
/// Throws PreconditionError on an empty list.
void emit_report(const std::vector<EvalRun>& runs, const std::string& out_dir);

/// Reads the reports of a report.json written by emit_report.
std::vector<EvalReport> read_reports(const std::string& path);

std::string traces_to_jsonl(const std::vector<EpisodeTrace>& traces);
std::vector<EpisodeTrace> read_traces(const std::string& path);

}  // namespace actforge::evaluation

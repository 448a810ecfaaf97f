#include "actforge/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>

#include <spdlog/spdlog.h>

#include "actforge/errors.hpp"
#include "actforge/evaluation.hpp"
#include "actforge/hashing.hpp"
#include "actforge/rng.hpp"
#include "json_io.hpp"

namespace actforge::trainers {

namespace fs = std::filesystem;
using jsonio::json;

void IlConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("il config: " + what); };
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(warmup_ratio >= 0 && warmup_ratio < 1)) fail("warmup_ratio must be in [0, 1)");
  if (!(temperature > 0)) fail("temperature must be positive");
  if (!(weight_decay >= 0)) fail("weight_decay must be non-negative");
}

std::vector<IlExample> encode_il(const textenv::ExpertDataset& expert, std::size_t dim) {
  std::vector<IlExample> out;
  out.reserve(expert.records.size());
  for (const auto& rec : expert.records) {
    auto prompt = std::make_shared<const policy::EncodedPrompt>(
        policy::encode(policy::PromptSpec::action(rec.context), dim));
    const auto idx = prompt->find(rec.expert_action);
    if (!idx)
      throw DataError("expert action '" + rec.expert_action + "' is not in the response set (task " + rec.task_id +
                      ", step " + std::to_string(rec.step_index) + ")");
    out.push_back({std::move(prompt), *idx});
  }
  return out;
}

LossAndGrad il_loss_and_grad(const policy::PolicyParams& params, std::span<const IlExample> batch,
                             double temperature) {
  if (batch.empty()) throw PreconditionError("empty imitation batch");
  LossAndGrad out;
  out.grad.assign(params.dim(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> coeff;
  for (const auto& ex : batch) {
    const auto lp = policy::log_probabilities(params, *ex.prompt, temperature);
    out.loss -= lp[ex.expert_index] * inv_n;
    // -grad log pi_e = (1/T) sum_j (pi_j - [j == e]) phi_j
    coeff.resize(lp.size());
    for (std::size_t j = 0; j < lp.size(); ++j) coeff[j] = std::exp(lp[j]) * inv_n;
    coeff[ex.expert_index] -= inv_n;
    policy::add_weighted_features(*ex.prompt, coeff, 1.0 / temperature, out.grad);
  }
  return out;
}

IlResult train_il(const policy::PolicyParams& params, const textenv::ExpertDataset& expert, const IlConfig& config) {
  config.validate();
  if (expert.records.empty()) throw PreconditionError("imitation dataset is empty");
  const auto examples = encode_il(expert, params.dim());
  const std::size_t n = examples.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t per_epoch = (n + batch - 1) / batch;

  IlResult result{params, {}, 0.0, 0.0};
  result.initial_loss = il_loss_and_grad(params, examples, config.temperature).loss;
  optim::LrSchedule schedule{config.learning_rate, config.lr_schedule, config.warmup_ratio,
                             per_epoch * static_cast<std::size_t>(config.epochs)};
  optim::Adam adam(params.dim(), 0.9, 0.999, 1e-8, config.weight_decay);
  Rng rng(derive_seed(config.seed, 0x696c));
  std::vector<std::size_t> order(n);
  std::vector<IlExample> mb;
  int iteration = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      mb.clear();
      for (std::size_t i = start; i < std::min(n, start + batch); ++i) mb.push_back(examples[order[i]]);
      auto lg = il_loss_and_grad(result.params, mb, config.temperature);
      const double lr = schedule.at(static_cast<std::size_t>(iteration));
      double sq = 0.0;
      for (double g : lg.grad) sq += g * g;
      result.history.push_back({iteration, epoch, lg.loss, std::sqrt(sq), lr});
      result.params = adam.step(result.params, lg.grad, lr);
      ++iteration;
    }
  }
  result.final_loss = config.epochs > 0 ? il_loss_and_grad(result.params, examples, config.temperature).loss
                                        : result.initial_loss;
  return result;
}

void write_il_history_csv(const std::vector<IlHistoryRow>& history, const std::string& path) {
  std::string out = "iteration,epoch,loss,grad_norm,lr\n";
  char buf[160];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", r.iteration, r.epoch, r.loss, r.grad_norm, r.lr);
    out += buf;
  }
  jsonio::write_text_file(path, out);
}

std::vector<grpo::TrainingPrompt> critic_prompts(const std::vector<actdata::CriticExample>& critic, std::size_t dim) {
  std::vector<grpo::TrainingPrompt> out;
  out.reserve(critic.size());
  for (const auto& ex : critic) {
    ex.validate();
    out.push_back({std::make_shared<const policy::EncodedPrompt>(policy::encode(ex.prompt(), dim)), ex.a_plus,
                   ex.context.admissible_actions});
  }
  return out;
}

std::vector<grpo::TrainingPrompt> action_prompts(const textenv::ExpertDataset& expert, std::size_t dim) {
  std::vector<grpo::TrainingPrompt> out;
  out.reserve(expert.records.size());
  for (const auto& rec : expert.records)
    out.push_back({std::make_shared<const policy::EncodedPrompt>(
                       policy::encode(policy::PromptSpec::action(rec.context), dim)),
                   rec.expert_action, rec.context.admissible_actions});
  return out;
}

StageResult run_act_stage(const policy::PolicyParams& params, const std::vector<actdata::CriticExample>& critic,
                          const grpo::GrpoConfig& config, bool adm_enabled,
                          const grpo::IterationCallback& on_iteration) {
  if (critic.empty()) throw PreconditionError("critic dataset is empty");
  auto r = grpo::train_grpo(params, critic_prompts(critic, params.dim()), grpo::make_reward_adapter(adm_enabled),
                            config, on_iteration);
  const double final_reward = r.final_mean_reward();
  return {std::move(r.params), std::move(r.history), final_reward};
}

StageResult run_rl_action_stage(const policy::PolicyParams& params, const textenv::ExpertDataset& expert,
                                const grpo::GrpoConfig& config, bool adm_enabled,
                                const grpo::IterationCallback& on_iteration) {
  if (expert.records.empty()) throw PreconditionError("expert dataset is empty");
  auto r = grpo::train_grpo(params, action_prompts(expert, params.dim()), grpo::make_reward_adapter(adm_enabled),
                            config, on_iteration);
  const double final_reward = r.final_mean_reward();
  return {std::move(r.params), std::move(r.history), final_reward};
}

// ---------------------------------------------------------------------------
// Variants

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::None: return "none";
    case Variant::IL: return "il";
    case Variant::RL: return "rl";
    case Variant::ActOnly: return "act";
    case Variant::IlWithAct: return "il-act";
    case Variant::RlWithAct: return "rl-act";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::None, Variant::IL, Variant::RL, Variant::ActOnly, Variant::IlWithAct, Variant::RlWithAct})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected none|il|rl|act|il-act|rl-act)");
}

bool uses_act(Variant v) { return v == Variant::ActOnly || v == Variant::IlWithAct || v == Variant::RlWithAct; }

// ---------------------------------------------------------------------------
// Pipeline config

void PipelineConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (dim > (std::size_t{1} << 32)) throw ConfigError("dim must fit in 32 bits");
  if (expert_path.empty() && expert_tasks < 1) throw ConfigError("expert_tasks must be >= 1");
  if (critic_k < 1) throw ConfigError("critic.k must be >= 1");
  if (!(critic_temperature > 0)) throw ConfigError("critic.temperature must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
  if (uses_act(variant)) act.validate();
  if (variant == Variant::RL || variant == Variant::RlWithAct) rl.validate();
  if (variant == Variant::IL || variant == Variant::IlWithAct) il.validate();
  if (eval.enabled) {
    if (eval.id_episodes < 0 || eval.ood_episodes < 0) throw ConfigError("eval episodes must be >= 0");
    if (eval.seeds.empty()) throw ConfigError("eval.seeds is empty");
  }
}

namespace {

std::string_view schedule_name(optim::Schedule s) { return s == optim::Schedule::Cosine ? "cosine" : "constant"; }

optim::Schedule parse_schedule(const std::string& s) {
  if (s == "cosine") return optim::Schedule::Cosine;
  if (s == "constant") return optim::Schedule::Constant;
  throw ConfigError("unknown lr schedule '" + s + "'");
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

const std::vector<std::string>& grpo_keys() {
  static const std::vector<std::string> keys{"group_size",  "clip_eps",   "kl_coeff",   "advantage_eps",
                                             "inner_epochs", "learning_rate", "lr_schedule", "warmup_ratio",
                                             "max_epochs",  "batch_size", "temperature", "weight_decay", "seed",
                                             "checkpoint_every"};
  return keys;
}

void reject_unknown(const json& j, const std::vector<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
}

grpo::GrpoConfig grpo_from_json(const json& j, grpo::GrpoConfig c, const std::string& where) {
  reject_unknown(j, grpo_keys(), where);
  read_opt(j, "group_size", c.group_size, where);
  read_opt(j, "clip_eps", c.clip_eps, where);
  read_opt(j, "kl_coeff", c.kl_coeff, where);
  read_opt(j, "advantage_eps", c.advantage_eps, where);
  read_opt(j, "inner_epochs", c.inner_epochs, where);
  read_opt(j, "learning_rate", c.learning_rate, where);
  std::string sched(schedule_name(c.lr_schedule));
  read_opt(j, "lr_schedule", sched, where);
  c.lr_schedule = parse_schedule(sched);
  read_opt(j, "warmup_ratio", c.warmup_ratio, where);
  read_opt(j, "max_epochs", c.max_epochs, where);
  read_opt(j, "batch_size", c.batch_size, where);
  read_opt(j, "temperature", c.temperature, where);
  read_opt(j, "weight_decay", c.weight_decay, where);
  read_opt(j, "seed", c.seed, where);
  read_opt(j, "checkpoint_every", c.checkpoint_every, where);
  return c;
}

json grpo_to_json(const grpo::GrpoConfig& c) {
  return {{"group_size", c.group_size},       {"clip_eps", c.clip_eps},
          {"kl_coeff", c.kl_coeff},           {"advantage_eps", c.advantage_eps},
          {"inner_epochs", c.inner_epochs},   {"learning_rate", c.learning_rate},
          {"lr_schedule", schedule_name(c.lr_schedule)}, {"warmup_ratio", c.warmup_ratio},
          {"max_epochs", c.max_epochs},       {"batch_size", c.batch_size},
          {"temperature", c.temperature},     {"weight_decay", c.weight_decay},
          {"seed", c.seed},                   {"checkpoint_every", c.checkpoint_every}};
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace

PipelineConfig pipeline_config_from_json_text(const std::string& text, const std::vector<std::string>& overrides) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("pipeline config is not a JSON object");
  for (const auto& o : overrides) apply_override(j, o);
  reject_unknown(j,
                 {"variant", "env", "env_config", "expert_path", "critic_path", "expert_tasks", "critic", "act", "rl",
                  "il", "dim", "seed", "output_dir", "eval"},
                 "");

  PipelineConfig c;
  std::string s;
  if (j.contains("variant")) {
    read_opt(j, "variant", s, "pipeline");
    c.variant = parse_variant(s);
  }
  if (j.contains("env")) {
    read_opt(j, "env", s, "pipeline");
    try {
      c.env = textenv::parse_env_kind(s);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  read_opt(j, "env_config", c.env_config, "pipeline");
  read_opt(j, "expert_path", c.expert_path, "pipeline");
  read_opt(j, "critic_path", c.critic_path, "pipeline");
  read_opt(j, "expert_tasks", c.expert_tasks, "pipeline");
  read_opt(j, "dim", c.dim, "pipeline");
  read_opt(j, "seed", c.seed, "pipeline");
  read_opt(j, "output_dir", c.output_dir, "pipeline");
  if (auto it = j.find("critic"); it != j.end()) {
    reject_unknown(*it, {"k", "temperature"}, "critic");
    read_opt(*it, "k", c.critic_k, "critic");
    read_opt(*it, "temperature", c.critic_temperature, "critic");
  }
  // Stage seeds default to values derived from the pipeline seed.
  c.act.seed = derive_seed(c.seed, 1);
  c.il.seed = derive_seed(c.seed, 2);
  c.rl.seed = derive_seed(c.seed, 3);
  if (auto it = j.find("act"); it != j.end()) c.act = grpo_from_json(*it, c.act, "act");
  if (auto it = j.find("rl"); it != j.end()) c.rl = grpo_from_json(*it, c.rl, "rl");
  if (auto it = j.find("il"); it != j.end()) {
    reject_unknown(*it,
                   {"learning_rate", "epochs", "batch_size", "lr_schedule", "warmup_ratio", "temperature",
                    "weight_decay", "seed"},
                   "il");
    read_opt(*it, "learning_rate", c.il.learning_rate, "il");
    read_opt(*it, "epochs", c.il.epochs, "il");
    read_opt(*it, "batch_size", c.il.batch_size, "il");
    std::string sched(schedule_name(c.il.lr_schedule));
    read_opt(*it, "lr_schedule", sched, "il");
    c.il.lr_schedule = parse_schedule(sched);
    read_opt(*it, "warmup_ratio", c.il.warmup_ratio, "il");
    read_opt(*it, "temperature", c.il.temperature, "il");
    read_opt(*it, "weight_decay", c.il.weight_decay, "il");
    read_opt(*it, "seed", c.il.seed, "il");
  }
  if (auto it = j.find("eval"); it != j.end()) {
    reject_unknown(*it, {"enabled", "id_episodes", "ood_episodes", "seeds", "max_steps"}, "eval");
    read_opt(*it, "enabled", c.eval.enabled, "eval");
    read_opt(*it, "id_episodes", c.eval.id_episodes, "eval");
    read_opt(*it, "ood_episodes", c.eval.ood_episodes, "eval");
    read_opt(*it, "seeds", c.eval.seeds, "eval");
    read_opt(*it, "max_steps", c.eval.max_steps, "eval");
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = jsonio::read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return pipeline_config_from_json_text(text, overrides);
}

std::string pipeline_config_to_json_text(const PipelineConfig& c) {
  json j{{"variant", to_string(c.variant)},
         {"env", textenv::to_string(c.env)},
         {"env_config", c.env_config},
         {"expert_path", c.expert_path},
         {"critic_path", c.critic_path},
         {"expert_tasks", c.expert_tasks},
         {"critic", {{"k", c.critic_k}, {"temperature", c.critic_temperature}}},
         {"act", grpo_to_json(c.act)},
         {"rl", grpo_to_json(c.rl)},
         {"il",
          {{"learning_rate", c.il.learning_rate},
           {"epochs", c.il.epochs},
           {"batch_size", c.il.batch_size},
           {"lr_schedule", schedule_name(c.il.lr_schedule)},
           {"warmup_ratio", c.il.warmup_ratio},
           {"temperature", c.il.temperature},
           {"weight_decay", c.il.weight_decay},
           {"seed", c.il.seed}}},
         {"dim", c.dim},
         {"seed", c.seed},
         {"output_dir", c.output_dir},
         {"eval",
          {{"enabled", c.eval.enabled},
           {"id_episodes", c.eval.id_episodes},
           {"ood_episodes", c.eval.ood_episodes},
           {"seeds", c.eval.seeds},
           {"max_steps", c.eval.max_steps}}}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

[[noreturn]] void rethrow_in_stage(const std::string& stage) {
  try {
    throw;
  } catch (const NumericError& e) {
    throw NumericError("stage " + stage + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError("stage " + stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error("stage " + stage + ": " + e.what());
  }
}

std::string rel(const fs::path& p, const fs::path& base) { return fs::relative(p, base).generic_string(); }

textenv::EnvConfig load_or_generate_env(const PipelineConfig& c) {
  if (!c.env_config.empty()) {
    auto cfg = textenv::load_env_config(c.env_config);
    if (cfg.kind != c.env)
      throw ConfigError("env_config '" + c.env_config + "' is " + std::string(textenv::to_string(cfg.kind)) +
                        ", pipeline env is " + std::string(textenv::to_string(c.env)));
    return cfg;
  }
  // The registry is fixed across pipeline seeds so variants share tasks.
  return c.env == textenv::EnvKind::GridHouse ? textenv::generate_gridhouse(0) : textenv::generate_shopsim(0);
}

}  // namespace

RunArtifacts run_pipeline(const PipelineConfig& config) {
  config.validate();
  const fs::path out(config.output_dir);
  fs::create_directories(out);
  RunArtifacts art;
  art.output_dir = out.generic_string();
  const bool adm_enabled = config.env == textenv::EnvKind::GridHouse;

  jsonio::write_text_file((out / "pipeline.json").string(), pipeline_config_to_json_text(config));

  textenv::EnvConfig env;
  textenv::ExpertDataset expert;
  try {
    env = load_or_generate_env(config);
    if (config.env_config.empty()) textenv::save_env_config(env, (out / "env.json").string());
    if (!config.expert_path.empty()) {
      art.expert_path = config.expert_path;
      expert = textenv::read_expert_dataset(config.expert_path);
    } else {
      art.expert_path = (out / "expert.jsonl").string();
      expert = textenv::generate_demonstrations(env, config.expert_tasks, derive_seed(config.seed, 4));
      textenv::write_expert_dataset(expert, art.expert_path);
    }
  } catch (...) {
    rethrow_in_stage("data");
  }

  const policy::PolicyParams init(config.dim, config.seed);
  policy::PolicyParams params = init;
  std::vector<actdata::CriticExample> critic;
  if (uses_act(config.variant)) {
    try {
      if (!config.critic_path.empty()) {
        art.critic_path = config.critic_path;
        critic = actdata::read_dataset(config.critic_path);
      } else {
        art.critic_path = (out / "critic.jsonl").string();
        critic = actdata::build_critic_dataset(
            expert, init, {config.critic_k, config.critic_temperature, derive_seed(config.seed, 5)});
        actdata::write_dataset(critic, art.critic_path);
      }
    } catch (...) {
      rethrow_in_stage("critic-data");
    }
  }

  auto save_stage = [&](const std::string& stage, const policy::PolicyParams& p,
                        const std::function<void(const std::string&)>& write_history) {
    const fs::path dir = out / stage;
    fs::create_directories(dir);
    StageArtifacts sa{stage, (dir / "checkpoint.bin").string(), ""};
    policy::save_checkpoint(p, sa.checkpoint);
    if (write_history) {
      sa.history = (dir / "history.csv").string();
      write_history(sa.history);
    }
    art.stages.push_back(std::move(sa));
  };

  auto periodic = [&](const std::string& stage, int every) -> grpo::IterationCallback {
    if (every <= 0) return {};
    return [&, stage, every](int iteration, const policy::PolicyParams& p) {
      if ((iteration + 1) % every != 0) return;
      char name[32];
      std::snprintf(name, sizeof(name), "iter_%06d.bin", iteration + 1);
      fs::create_directories(out / stage);
      policy::save_checkpoint(p, (out / stage / name).string());
    };
  };

  auto act_stage = [&] {
    try {
      spdlog::info("stage act: {} critic examples", critic.size());
      auto r = run_act_stage(params, critic, config.act, adm_enabled, periodic("act", config.act.checkpoint_every));
      params = std::move(r.params);
      save_stage("act", params, [&](const std::string& p) { grpo::write_history_csv(r.history, p); });
    } catch (...) {
      rethrow_in_stage("act");
    }
  };
  auto il_stage = [&] {
    try {
      spdlog::info("stage il: {} expert records", expert.records.size());
      auto r = train_il(params, expert, config.il);
      params = std::move(r.params);
      save_stage("il", params, [&](const std::string& p) { write_il_history_csv(r.history, p); });
    } catch (...) {
      rethrow_in_stage("il");
    }
  };
  auto rl_stage = [&] {
    try {
      spdlog::info("stage rl: {} expert records", expert.records.size());
      auto r = run_rl_action_stage(params, expert, config.rl, adm_enabled, periodic("rl", config.rl.checkpoint_every));
      params = std::move(r.params);
      save_stage("rl", params, [&](const std::string& p) { grpo::write_history_csv(r.history, p); });
    } catch (...) {
      rethrow_in_stage("rl");
    }
  };

  switch (config.variant) {
    case Variant::None:
      save_stage("init", params, nullptr);
      break;
    case Variant::IL: il_stage(); break;
    case Variant::RL: rl_stage(); break;
    case Variant::ActOnly: act_stage(); break;
    case Variant::IlWithAct:
      act_stage();
      il_stage();
      break;
    case Variant::RlWithAct:
      act_stage();
      rl_stage();
      break;
  }

  if (config.eval.enabled) {
    try {
      evaluation::check_split_hygiene(env, expert);
      auto run = evaluation::evaluate_model(params, env, std::string(to_string(config.variant)),
                                            config.eval.id_episodes > 0, config.eval.ood_episodes > 0,
                                            config.eval.id_episodes, config.eval.ood_episodes, config.eval.seeds,
                                            config.eval.max_steps);
      const auto heldout_ids = textenv::heldout_task_ids(env, expert);
      if (!heldout_ids.empty()) {
        const auto heldout = textenv::generate_demonstrations_for(env, heldout_ids, derive_seed(config.seed, 6));
        run.report.next_action_accuracy = evaluation::evaluate_next_action(params, heldout);
        const auto heldout_critic =
            actdata::build_critic_dataset(heldout, init, {1, config.critic_temperature, derive_seed(config.seed, 7)});
        if (!heldout_critic.empty())
          run.report.critic_accuracy = evaluation::evaluate_critic_accuracy(params, heldout_critic);
      }
      evaluation::emit_report({run}, (out / "eval").string());
      art.report = (out / "eval" / "report.json").string();
    } catch (...) {
      rethrow_in_stage("eval");
    }
  }

  // Manifest of every produced file with its content hash.
  json files = json::array();
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(out))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths)
    files.push_back({{"path", rel(p, out)}, {"fnv1a64", file_content_hash(p.string())}});
  json stages = json::array();
  for (const auto& s : art.stages)
    stages.push_back({{"stage", s.stage},
                      {"checkpoint", rel(s.checkpoint, out)},
                      {"history", s.history.empty() ? "" : rel(s.history, out)}});
  json manifest{{"variant", to_string(config.variant)},
                {"env", textenv::to_string(config.env)},
                {"seed", config.seed},
                {"stages", stages},
                {"final_checkpoint", rel(art.final_checkpoint(), out)},
                {"report", art.report.empty() ? "" : rel(art.report, out)},
                {"files", files}};
  art.manifest = (out / "manifest.json").string();
  jsonio::write_text_file(art.manifest, manifest.dump(2) + "\n");
  return art;
}

}  // namespace actforge::trainers

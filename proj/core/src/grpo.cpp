#include "actforge/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <spdlog/spdlog.h>

#include "actforge/errors.hpp"
#include "actforge/rng.hpp"
#include "json_io.hpp"

namespace actforge::grpo {

void GrpoConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("grpo config: " + what); };
  if (group_size < 2) fail("group_size must be >= 2");
  if (!(clip_eps > 0)) fail("clip_eps must be positive");
  if (!(kl_coeff >= 0)) fail("kl_coeff must be non-negative");
  if (!(advantage_eps > 0)) fail("advantage_eps must be positive");
  if (inner_epochs < 1) fail("inner_epochs must be >= 1");
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (!(warmup_ratio >= 0 && warmup_ratio < 1)) fail("warmup_ratio must be in [0, 1)");
  if (max_epochs < 0) fail("max_epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(temperature > 0)) fail("temperature must be positive");
  if (!(weight_decay >= 0)) fail("weight_decay must be non-negative");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
}

std::vector<double> group_advantages(std::span<const double> rewards, double eps) {
  if (rewards.size() < 2) throw ConfigError("group advantages need at least 2 rewards");
  // Deviations are taken from the first reward so that a group of equal
  // rewards yields exactly zero rather than rounding noise over eps.
  const double n = static_cast<double>(rewards.size());
  std::vector<double> d(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) d[i] = rewards[i] - rewards[0];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  for (double& x : d) x = (x - mean) / (sd + eps);
  return d;
}

double importance_ratio(double new_logprob, double old_logprob) {
  if (!std::isfinite(new_logprob) || !std::isfinite(old_logprob))
    throw NumericError("importance ratio of non-finite log-probabilities");
  const double diff = new_logprob - old_logprob;
  if (diff > std::log(kMaxImportanceRatio)) {
    spdlog::warn("importance ratio exp({}) clamped to {}", diff, kMaxImportanceRatio);
    return kMaxImportanceRatio;
  }
  return std::exp(diff);
}

double clipped_term(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double kl_exact(const policy::PolicyParams& params, const policy::PolicyParams& ref,
                const policy::EncodedPrompt& prompt, double temperature) {
  if (params.dim() != ref.dim()) throw PreconditionError("KL between policies of different dimension");
  const auto lp = policy::log_probabilities(params, prompt, temperature);
  const auto lr = policy::log_probabilities(ref, prompt, temperature);
  double kl = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) kl += std::exp(lp[i]) * (lp[i] - lr[i]);
  return std::max(kl, 0.0);
}

double kl_exact(const policy::PolicyParams& params, const policy::PolicyParams& ref,
                const policy::PromptSpec& prompt, double temperature) {
  return kl_exact(params, ref, policy::encode(prompt, params.dim()), temperature);
}

Objective grpo_objective(const policy::PolicyParams& params, const policy::PolicyParams& ref,
                         std::span<const GroupBatch> batch, const GrpoConfig& config) {
  if (batch.empty()) throw PreconditionError("empty GRPO batch");
  const double T = config.temperature;
  std::size_t members = 0;
  for (const auto& b : batch) members += b.responses.size();
  const double inv_members = 1.0 / static_cast<double>(members);
  const double inv_prompts = 1.0 / static_cast<double>(batch.size());

  Objective out;
  out.grad.assign(params.dim(), 0.0);
  std::size_t clipped = 0;
  std::vector<double> coeff;
  for (const auto& b : batch) {
    const auto& prompt = *b.prompt;
    // log pi is taken as log of the probability entries, the same way
    // sample_group records old log-probabilities, so rho is exactly 1 at
    // theta == theta_old.
    const auto pi = policy::probabilities(params, prompt, T);
    const auto lp = policy::log_probabilities(params, prompt, T);
    auto sampled_logprob = [&](std::size_t j) { return pi[j] > 0.0 ? std::log(pi[j]) : lp[j]; };

    // Surrogate: d(rho A)/dtheta = A rho grad log pi where the unclipped
    // branch is the minimum; zero where the clipped constant wins.
    coeff.assign(prompt.size(), 0.0);
    for (std::size_t g = 0; g < b.responses.size(); ++g) {
      const auto& m = b.responses[g];
      const double adv = b.advantages[g];
      const double rho = importance_ratio(sampled_logprob(m.response_index), m.old_logprob);
      const double unclipped = rho * adv;
      const double term = clipped_term(rho, adv, config.clip_eps);
      out.surrogate += term * inv_members;
      if (unclipped <= term) {
        coeff[m.response_index] += -inv_members * adv * rho;
      } else {
        ++clipped;
      }
    }
    // sum_i c_i grad log pi_i = (1/T) sum_j (c_j - C pi_j) phi_j
    const double total = std::accumulate(coeff.begin(), coeff.end(), 0.0);
    for (std::size_t j = 0; j < coeff.size(); ++j) coeff[j] -= total * pi[j];

    // Exact KL and its gradient: (1/T) sum_j pi_j (d_j - KL) phi_j, with
    // d_j = log pi_j - log ref_j.
    const auto lr = policy::log_probabilities(ref, prompt, T);
    double kl = 0.0;
    for (std::size_t j = 0; j < lp.size(); ++j) kl += pi[j] * (lp[j] - lr[j]);
    out.kl += kl * inv_prompts;
    if (config.kl_coeff > 0.0) {
      const double w = config.kl_coeff * inv_prompts;
      for (std::size_t j = 0; j < coeff.size(); ++j) coeff[j] += w * pi[j] * ((lp[j] - lr[j]) - kl);
    }
    policy::add_weighted_features(prompt, coeff, 1.0 / T, out.grad);
  }
  out.value = -out.surrogate + (config.kl_coeff > 0.0 ? config.kl_coeff * out.kl : 0.0);
  out.clip_fraction = static_cast<double>(clipped) * inv_members;
  for (double g : out.grad)
    if (!std::isfinite(g)) throw NumericError("non-finite GRPO gradient");
  return out;
}

std::pair<policy::PolicyParams, StepStats> grpo_step(const policy::PolicyParams& params,
                                                     const policy::PolicyParams& ref,
                                                     std::span<const GroupBatch> batch, const GrpoConfig& config,
                                                     optim::Adam& optimizer, double lr) {
  auto obj = grpo_objective(params, ref, batch, config);
  StepStats stats;
  std::size_t members = 0;
  for (const auto& b : batch) {
    for (std::size_t g = 0; g < b.rewards.size(); ++g) {
      stats.mean_reward += b.rewards[g];
      stats.mean_abs_adv += std::abs(b.advantages[g]);
    }
    members += b.rewards.size();
  }
  stats.mean_reward /= static_cast<double>(members);
  stats.mean_abs_adv /= static_cast<double>(members);
  stats.clip_fraction = obj.clip_fraction;
  stats.kl = obj.kl;
  stats.objective = obj.value;
  double sq = 0.0;
  for (double g : obj.grad) sq += g * g;
  stats.grad_norm = std::sqrt(sq);
  auto next = optimizer.step(params, obj.grad, lr);
  return {std::move(next), stats};
}

RewardAdapter make_reward_adapter(bool adm_enabled) {
  return [adm_enabled](const policy::Response& response, const TrainingPrompt& prompt) {
    return reward::score(response, prompt.expert_action, prompt.admissible, adm_enabled);
  };
}

GroupBatch sample_batch(const policy::PolicyParams& old_params, const TrainingPrompt& prompt,
                        const RewardAdapter& reward, const GrpoConfig& config, std::uint64_t seed) {
  GroupBatch b;
  b.prompt = prompt.prompt;
  b.expert_action = prompt.expert_action;
  const auto samples = policy::sample_group(old_params, *prompt.prompt, config.group_size, config.temperature, seed);
  for (const auto& s : samples) {
    b.responses.push_back({s.index, s.logprob});
    b.rewards.push_back(reward(s.response, prompt).total);
  }
  b.advantages = group_advantages(b.rewards, config.advantage_eps);
  return b;
}

double TrainResult::final_mean_reward(std::size_t window) const {
  if (history.empty()) return 0.0;
  const std::size_t n = std::min(window, history.size());
  double s = 0.0;
  for (std::size_t i = history.size() - n; i < history.size(); ++i) s += history[i].mean_reward;
  return s / static_cast<double>(n);
}

TrainResult train_grpo(const policy::PolicyParams& params, const std::vector<TrainingPrompt>& prompts,
                       const RewardAdapter& reward, const GrpoConfig& config, const IterationCallback& on_iteration) {
  config.validate();
  if (prompts.empty()) throw PreconditionError("GRPO training set is empty");
  const std::size_t n = prompts.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t iters_per_epoch = (n + batch - 1) / batch;
  const std::size_t total_iters = iters_per_epoch * static_cast<std::size_t>(config.max_epochs);

  optim::LrSchedule schedule{config.learning_rate, config.lr_schedule, config.warmup_ratio,
                             total_iters * static_cast<std::size_t>(config.inner_epochs)};
  optim::Adam adam(params.dim(), 0.9, 0.999, 1e-8, config.weight_decay);
  const policy::PolicyParams ref = params;

  TrainResult result{params, {}};
  Rng order_rng(derive_seed(config.seed, 0x6f72646572));
  std::vector<std::size_t> order(n);
  std::size_t opt_step = 0;
  int iteration = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const policy::PolicyParams old = result.params;
      std::vector<GroupBatch> groups;
      groups.reserve(end - start);
      for (std::size_t i = start; i < end; ++i)
        groups.push_back(sample_batch(old, prompts[order[i]], reward, config,
                                      derive_seed(config.seed, static_cast<std::uint64_t>(iteration), order[i])));

      HistoryRow row;
      row.iteration = iteration;
      row.lr = schedule.at(opt_step);
      for (int inner = 0; inner < config.inner_epochs; ++inner) {
        auto [next, stats] = grpo_step(result.params, ref, groups, config, adam, schedule.at(opt_step));
        ++opt_step;
        result.params = std::move(next);
        row.mean_reward = stats.mean_reward;
        row.mean_abs_adv = stats.mean_abs_adv;
        row.clip_fraction += stats.clip_fraction / config.inner_epochs;
        row.kl += stats.kl / config.inner_epochs;
        row.grad_norm += stats.grad_norm / config.inner_epochs;
      }
      result.history.push_back(row);
      if (on_iteration) on_iteration(iteration, result.params);
      ++iteration;
    }
  }
  return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
  std::string out = "iteration,mean_reward,mean_abs_adv,clip_fraction,kl,grad_norm,lr\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.mean_reward,
                  r.mean_abs_adv, r.clip_fraction, r.kl, r.grad_norm, r.lr);
    out += buf;
  }
  jsonio::write_text_file(path, out);
}

}  // namespace actforge::grpo

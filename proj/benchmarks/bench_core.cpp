// Hot paths of training: featurization, the softmax, GRPO updates and
// environment rollouts.

#include <benchmark/benchmark.h>

#include "actforge/grpo.hpp"
#include "actforge/policy.hpp"
#include "actforge/textenv.hpp"
#include "actforge/trainers.hpp"

using namespace actforge;

namespace {

const textenv::EnvConfig& env() {
  static const auto cfg = textenv::generate_gridhouse(0, {24, 8});
  return cfg;
}

const textenv::ExpertDataset& expert() {
  static const auto ds = textenv::generate_demonstrations(env(), 40, 1);
  return ds;
}

void BM_EncodeActionPrompt(benchmark::State& state) {
  const auto& rec = expert().records[expert().records.size() / 2];
  const auto spec = policy::PromptSpec::action(rec.context);
  for (auto _ : state) benchmark::DoNotOptimize(policy::encode(spec, policy::kDefaultDim));
}
BENCHMARK(BM_EncodeActionPrompt);

void BM_Probabilities(benchmark::State& state) {
  const auto& rec = expert().records[expert().records.size() / 2];
  const auto prompt = policy::encode(policy::PromptSpec::action(rec.context), policy::kDefaultDim);
  const policy::PolicyParams params(policy::kDefaultDim, 0);
  for (auto _ : state) benchmark::DoNotOptimize(policy::probabilities(params, prompt, 1.0));
}
BENCHMARK(BM_Probabilities);

void BM_GrpoStep(benchmark::State& state) {
  grpo::GrpoConfig cfg;
  cfg.batch_size = static_cast<int>(state.range(0));
  const auto prompts = trainers::action_prompts(expert(), policy::kDefaultDim);
  const auto reward = grpo::make_reward_adapter(true);
  const policy::PolicyParams params(policy::kDefaultDim, 0);
  std::vector<grpo::GroupBatch> batch;
  for (int i = 0; i < cfg.batch_size; ++i)
    batch.push_back(grpo::sample_batch(params, prompts[static_cast<std::size_t>(i) % prompts.size()], reward, cfg,
                                       static_cast<std::uint64_t>(i)));
  optim::Adam adam(params.dim());
  for (auto _ : state) benchmark::DoNotOptimize(grpo::grpo_step(params, params, batch, cfg, adam, cfg.learning_rate));
}
BENCHMARK(BM_GrpoStep)->Arg(8)->Arg(64);

void BM_ExpertEpisode(benchmark::State& state) {
  const auto& task = env().tasks.front();
  for (auto _ : state) {
    auto [s, ctx] = textenv::reset(env(), task.task_id, 0);
    int steps = 0;
    while (!textenv::goal_satisfied(s) && steps++ < 50) s = textenv::step(s, textenv::expert_action(s, task)).first;
    benchmark::DoNotOptimize(steps);
  }
}
BENCHMARK(BM_ExpertEpisode);

}  // namespace

BENCHMARK_MAIN();

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   actforge_acceptance --cli path/to/actforge --workdir DIR [--only N]...

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "actforge/actdata.hpp"
#include "actforge/errors.hpp"
#include "actforge/evaluation.hpp"
#include "actforge/grpo.hpp"
#include "actforge/reward.hpp"
#include "actforge/text.hpp"
#include "actforge/textenv.hpp"
#include "actforge/trainers.hpp"
#include "gradient_checks.hpp"
#include "reward_cases.hpp"

using namespace actforge;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, x);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "FAILED ") + what);
  }
  void info(const std::string& what) { notes.push_back(what); }
};

// ---------------------------------------------------------------------------
// Shared desk-scale training runs (criteria 5-8).

constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr int kIdEpisodes = 140;
constexpr int kOodEpisodes = 134;

const textenv::EnvConfig& registry() {
  static const auto env = textenv::generate_gridhouse(0);
  return env;
}

struct SplitRates {
  double id = 0.0;
  double ood = 0.0;
};

struct SeedRuns {
  std::uint64_t seed = 0;
  textenv::ExpertDataset expert;
  textenv::ExpertDataset heldout;
  std::vector<actdata::CriticExample> heldout_critic;
  trainers::PipelineConfig config;

  std::optional<policy::PolicyParams> act;
  double act_seconds = 0.0;
  std::optional<trainers::IlResult> il;
  std::optional<trainers::StageResult> rl;
  double rl_seconds = 0.0;
  std::optional<policy::PolicyParams> il_act, rl_act;
  std::map<std::string, SplitRates> success;
};

SeedRuns& seed_runs(std::uint64_t seed) {
  static std::map<std::uint64_t, SeedRuns> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;
  SeedRuns s;
  s.seed = seed;
  s.config = trainers::pipeline_config_from_json_text("{\"seed\": " + std::to_string(seed) + "}");
  const auto& env = registry();
  s.expert = textenv::generate_demonstrations(env, s.config.expert_tasks, derive_seed(seed, 4));
  s.heldout = textenv::generate_demonstrations_for(env, textenv::heldout_task_ids(env, s.expert), derive_seed(seed, 6));
  const policy::PolicyParams init(s.config.dim, seed);
  s.heldout_critic = actdata::build_critic_dataset(s.heldout, init, {1, 1.0, derive_seed(seed, 7)});
  return cache.emplace(seed, std::move(s)).first->second;
}

policy::PolicyParams init_params(const SeedRuns& s) { return policy::PolicyParams(s.config.dim, s.seed); }

const policy::PolicyParams& act_params(SeedRuns& s) {
  if (!s.act) {
    const auto t0 = Clock::now();
    const auto init = init_params(s);
    const auto critic = actdata::build_critic_dataset(
        s.expert, init, {s.config.critic_k, s.config.critic_temperature, derive_seed(s.seed, 5)});
    s.act = trainers::run_act_stage(init, critic, s.config.act, true).params;
    s.act_seconds = seconds_since(t0);
  }
  return *s.act;
}

const trainers::IlResult& il_result(SeedRuns& s) {
  if (!s.il) s.il = trainers::train_il(init_params(s), s.expert, s.config.il);
  return *s.il;
}

const trainers::StageResult& rl_result(SeedRuns& s) {
  if (!s.rl) {
    const auto t0 = Clock::now();
    s.rl = trainers::run_rl_action_stage(init_params(s), s.expert, s.config.rl, true);
    s.rl_seconds = seconds_since(t0);
  }
  return *s.rl;
}

const policy::PolicyParams& il_act_params(SeedRuns& s) {
  if (!s.il_act) s.il_act = trainers::train_il(act_params(s), s.expert, s.config.il).params;
  return *s.il_act;
}

const policy::PolicyParams& rl_act_params(SeedRuns& s) {
  if (!s.rl_act) s.rl_act = trainers::run_rl_action_stage(act_params(s), s.expert, s.config.rl, true).params;
  return *s.rl_act;
}

const policy::PolicyParams& variant_params(SeedRuns& s, const std::string& v) {
  if (v == "il") return il_result(s).params;
  if (v == "rl") return rl_result(s).params;
  if (v == "il-act") return il_act_params(s);
  return rl_act_params(s);
}

SplitRates success_of(SeedRuns& s, const std::string& variant) {
  auto it = s.success.find(variant);
  if (it != s.success.end()) return it->second;
  const auto& p = variant_params(s, variant);
  SplitRates r;
  r.id = evaluation::evaluate_success(p, registry(), textenv::Split::ID, kIdEpisodes, 0, s.seed).success_rate;
  r.ood = evaluation::evaluate_success(p, registry(), textenv::Split::OOD, kOodEpisodes, 0, s.seed).success_rate;
  return s.success[variant] = r;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string triple(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "/" : "") + fmt("%.3f", v[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome reward_table() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto cases = checks::reward_cases();
  int ok = 0;
  for (const auto& c : cases) ok += reward::score_action(c.action, c.expert, c.admissible, c.adm_enabled).total == c.total;
  o.check(cases.size() == 50 && ok == 50, std::to_string(ok) + "/" + std::to_string(cases.size()) + " fixture cases");

  const std::vector<std::string> pool{"look", "go to shelf 1", "go to cabinet 1", "open drawer 1", "inventory",
                                      "take mug 1 from shelf 1", "search[red mug]", "click[buy now]"};
  Rng rng(2024);
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    std::vector<std::string> adm;
    for (const auto& p : pool)
      if (rng.coin()) adm.push_back(p);
    std::optional<std::string> action;
    if (rng.below(5) != 0) action = pool[rng.below(pool.size())];
    const auto r = reward::score_action(action, pool[rng.below(pool.size())], adm, rng.coin());
    try {
      reward::check_invariants(r);
    } catch (const Error&) {
      ++violations;
    }
  }
  o.check(violations == 0, std::to_string(violations) + " invariant violations in 100000 random inputs");
  const double secs = seconds_since(t0);
  o.check(secs < 1.0, fmt("%.3f s < 1 s", secs));
  return o;
}

Outcome advantage_properties() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(7);
  const double composite[] = {1.0, 0.1, 0.0, -0.5};
  const double dyadic[] = {1.0, 0.5, 0.0, -0.5, 0.25};
  double worst_mean = 0.0;
  bool equal_zero = true, shift_exact = true;
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> r(2 + rng.below(15));
    for (auto& x : r) x = composite[rng.below(4)];
    const auto a = grpo::group_advantages(r, 1e-8);
    double m = 0.0;
    for (double x : a) m += x;
    worst_mean = std::max(worst_mean, std::abs(m / static_cast<double>(a.size())));

    std::vector<double> same(r.size(), composite[rng.below(4)]);
    for (double x : grpo::group_advantages(same, 1e-8)) equal_zero &= x == 0.0;

    // Shift invariance, compared bit for bit on inputs whose sums are exact.
    std::vector<double> d(std::size_t{1} << (1 + rng.below(4)));
    for (auto& x : d) x = dyadic[rng.below(5)];
    auto shifted = d;
    const double c = static_cast<double>(static_cast<int>(rng.below(9)) - 4);
    for (auto& x : shifted) x += c;
    shift_exact &= grpo::group_advantages(d, 1e-8) == grpo::group_advantages(shifted, 1e-8);
  }
  o.check(worst_mean <= 1e-9, "max |group mean| " + fmt("%.2e", worst_mean) + " <= 1e-9");
  o.check(equal_zero, "all-equal rewards give all-zero advantages");
  o.check(shift_exact, "shift invariance exact");

  const std::vector<double> g{1.0, 0.1, 0.1, -0.5};
  const long double mean = (1.0L + 0.1L + 0.1L - 0.5L) / 4.0L;
  long double var = 0.0L;
  for (double x : g) var += (x - mean) * (x - mean);
  const long double sd = std::sqrt(var / 4.0L);
  const auto a = grpo::group_advantages(g, 1e-8);
  double err = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    err = std::max(err, static_cast<double>(std::abs(a[i] - (g[i] - mean) / (sd + 1e-8L))));
  o.check(err < 1e-6, "worked group [1.0, 0.1, 0.1, -0.5] -> [" + fmt("%.4f", a[0]) + ", " + fmt("%.4f", a[1]) +
                          ", " + fmt("%.4f", a[2]) + ", " + fmt("%.4f", a[3]) + "], error " + fmt("%.1e", err));
  const double secs = seconds_since(t0);
  o.check(secs < 1.0, fmt("%.3f s < 1 s", secs));
  return o;
}

Outcome gradient_correctness() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(31337);
  double lp = 0.0, il = 0.0, gr = 0.0, clip = 0.0;
  for (int t = 0; t < 100; ++t) {
    lp = std::max(lp, checks::logprob_trial(rng, 32).rel_error);
    il = std::max(il, checks::il_trial(rng, 32).rel_error);
    const auto g = checks::grpo_trial(rng, 32);
    gr = std::max(gr, g.rel_error);
    clip += g.clip_fraction;
  }
  o.check(lp < 1e-4, "log pi max rel error " + fmt("%.1e", lp));
  o.check(il < 1e-4, "IL loss max rel error " + fmt("%.1e", il));
  o.check(gr < 1e-4, "GRPO objective (inner_epochs=2, beta>0) max rel error " + fmt("%.1e", gr));
  o.check(clip > 0.0, "clipped branch exercised (mean clip fraction " + fmt("%.3f", clip / 100.0) + ")");
  const double secs = seconds_since(t0);
  o.check(secs < 30.0, fmt("%.2f s < 30 s", secs));
  return o;
}

Outcome data_construction() {
  Outcome o;
  const auto t0 = Clock::now();
  auto expert = textenv::generate_demonstrations(registry(), 200, 11);
  if (expert.records.size() < 1000) {
    o.check(false, "only " + std::to_string(expert.records.size()) + " expert records");
    return o;
  }
  expert.records.resize(1000);
  const policy::PolicyParams uniform(policy::kDefaultDim, 0);
  const auto pairs = actdata::build_critic_dataset(expert, uniform, {1, 1.0, 12});
  int violations = 0, ones = 0;
  for (const auto& e : pairs) {
    violations += text::normalize(e.a_plus) == text::normalize(e.a_minus);
    ones += e.permutation_bit;
  }
  o.check(violations == 0, std::to_string(violations) + " pairs with equal candidates");
  const double frac = static_cast<double>(ones) / static_cast<double>(pairs.size());
  o.check(frac >= 0.45 && frac <= 0.55, "permutation_bit frequency " + fmt("%.3f", frac));
  const double expected = actdata::expected_pair_count_k1(expert, uniform, 1.0);
  const double dev = std::abs(static_cast<double>(pairs.size()) - expected) / expected;
  o.check(dev <= 0.05, std::to_string(pairs.size()) + " pairs vs analytic " + fmt("%.1f", expected) + " (" +
                           fmt("%.2f", 100 * dev) + "% off)");
  const double secs = seconds_since(t0);
  o.check(secs < 10.0, fmt("%.2f s < 10 s", secs));
  return o;
}

Outcome act_efficacy() {
  Outcome o;
  for (auto seed : kSeeds) {
    auto& s = seed_runs(seed);
    const auto& p = act_params(s);
    const double acc = evaluation::evaluate_critic_accuracy(p, s.heldout_critic);
    const double flipped = evaluation::evaluate_critic_accuracy(p, s.heldout_critic, true);
    const double before = evaluation::evaluate_critic_accuracy(init_params(s), s.heldout_critic);
    const double chance = evaluation::critic_chance_rate(s.heldout_critic);
    o.check(acc >= 0.90 && chance < 0.20 && s.act_seconds < 300.0,
            "seed " + std::to_string(seed) + ": held-out accuracy " + fmt("%.3f", acc) + " (untrained " +
                fmt("%.3f", before) + ", chance " + fmt("%.3f", chance) + ", flipped bits " + fmt("%.3f", flipped) +
                ", n=" + std::to_string(s.heldout_critic.size()) + "), " + fmt("%.1f s", s.act_seconds));
  }
  return o;
}

Outcome il_efficacy() {
  Outcome o;
  for (auto seed : kSeeds) {
    auto& s = seed_runs(seed);
    const auto& r = il_result(s);
    const double train = evaluation::evaluate_next_action(r.params, s.expert);
    const double held = evaluation::evaluate_next_action(r.params, s.heldout);
    o.check(train >= 0.95 && held >= 0.85 && s.config.il.epochs <= 3 && r.final_loss < r.initial_loss,
            "seed " + std::to_string(seed) + ": train " + fmt("%.3f", train) + ", held-out " + fmt("%.3f", held) +
                ", loss " + fmt("%.3f", r.initial_loss) + " -> " + fmt("%.4f", r.final_loss));
  }
  return o;
}

Outcome rl_action_stage() {
  Outcome o;
  for (auto seed : kSeeds) {
    auto& s = seed_runs(seed);
    const auto& r = rl_result(s);
    const double id = success_of(s, "rl").id;
    o.check(r.final_mean_reward >= 0.8 && id >= 0.80 && s.rl_seconds < 600.0,
            "seed " + std::to_string(seed) + ": final reward " + fmt("%.3f", r.final_mean_reward) +
                ", ID success " + fmt("%.3f", id) + " over " + std::to_string(kIdEpisodes) + ", " +
                fmt("%.1f s", s.rl_seconds));
  }
  return o;
}

Outcome directional() {
  Outcome o;
  std::map<std::string, std::vector<double>> id, ood;
  for (const char* v : {"il", "il-act", "rl", "rl-act"})
    for (auto seed : kSeeds) {
      const auto r = success_of(seed_runs(seed), v);
      id[v].push_back(r.id);
      ood[v].push_back(r.ood);
    }
  for (const auto& [base, with] : {std::pair<std::string, std::string>{"rl", "rl-act"}, {"il", "il-act"}}) {
    const double bi = median3(id[base]), wi = median3(id[with]);
    const double bo = median3(ood[base]), wo = median3(ood[with]);
    o.check(wi >= bi - 0.02, with + " ID " + fmt("%.3f", wi) + " [" + triple(id[with]) + "] >= " + base + " " +
                                 fmt("%.3f", bi) + " [" + triple(id[base]) + "] - 0.02");
    o.check(wo >= bo - 0.02, with + " OOD " + fmt("%.3f", wo) + " [" + triple(ood[with]) + "] >= " + base + " " +
                                 fmt("%.3f", bo) + " [" + triple(ood[base]) + "] - 0.02");
    o.check(wo - bo >= (wi - bi) - 0.05,
            with + " OOD gain " + fmt("%+.3f", wo - bo) + " >= ID gain " + fmt("%+.3f", wi - bi) + " - 0.05");
  }
  return o;
}

int run_process(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Every regular file under `a` has a byte-identical twin under `b` and
// vice versa.
bool same_tree(const fs::path& a, const fs::path& b, std::string& diff) {
  auto list = [&](const fs::path& root) {
    std::set<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) {
        out.insert(fs::relative(e.path(), root).generic_string());
      }
    return out;
  };
  const auto la = list(a), lb = list(b);
  if (la != lb) {
    diff = "file lists differ";
    return false;
  }
  for (const auto& f : la)
    if (slurp(a / f) != slurp(b / f)) {
      diff = f;
      return false;
    }
  return true;
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  Outcome o;
  const fs::path d = work / "determinism";
  fs::remove_all(d);
  fs::create_directories(d);
  const std::string q = "\"";
  if (run_process(q + cli + q + " gen-config --env gridhouse --seed 0 --out " + q + (d / "env.json").string() + q) !=
      0) {
    o.check(false, "gen-config failed");
    return o;
  }
  {
    std::ofstream(d / "pipeline.json") << "{\"variant\": \"rl-act\", \"env_config\": \"" << (d / "env.json").string()
                                       << "\", \"seed\": 1}\n";
  }
  // Both runs write to the same output_dir (recorded in pipeline.json);
  // the first is moved aside before the second starts.
  for (const char* run : {"a", "b"}) {
    const int rc = run_process(q + cli + q + " train --config " + q + (d / "pipeline.json").string() + q +
                               " --set output_dir=" + q + (d / "run").string() + q);
    if (rc != 0) {
      o.check(false, std::string("train run ") + run + " exited " + std::to_string(rc));
      return o;
    }
    fs::rename(d / "run", d / run);
  }
  std::string diff;
  const bool train_same = same_tree(d / "a", d / "b", diff);
  o.check(train_same, train_same ? "train rerun: checkpoints, histories, datasets, report and manifest byte-identical"
                                 : "train rerun differs at " + diff);
  for (const char* run : {"ea", "eb"}) {
    const int rc = run_process(q + cli + q + " eval --ckpt " + q + (d / "a" / "rl" / "checkpoint.bin").string() + q +
                               " --env " + q + (d / "env.json").string() + q + " --split both --seed 1 --seed 2" +
                               " --seed 3 --variant rl-act --out " + q + (d / run).string() + q);
    if (rc != 0) {
      o.check(false, std::string("eval run ") + run + " exited " + std::to_string(rc));
      return o;
    }
  }
  const bool eval_same = same_tree(d / "ea", d / "eb", diff);
  o.check(eval_same, eval_same ? "eval rerun: report, CSV and traces byte-identical" : "eval rerun differs at " + diff);
  return o;
}

Outcome kl_properties() {
  Outcome o;
  Rng rng(99);
  int negative = 0, nonzero_self = 0;
  const auto& expert = seed_runs(1).expert;
  for (int t = 0; t < 1000; ++t) {
    const auto& rec = expert.records[rng.below(expert.records.size())];
    const auto prompt = policy::encode(policy::PromptSpec::action(rec.context), 4096);
    const auto a = checks::random_params(rng, 4096, 1.0), b = checks::random_params(rng, 4096, 1.0);
    negative += grpo::kl_exact(a, b, prompt, 1.0) < 0.0;
    nonzero_self += grpo::kl_exact(a, a, prompt, 1.0) != 0.0;
  }
  o.check(negative == 0, std::to_string(negative) + " negative KL values over 1000 random pairs");
  o.check(nonzero_self == 0, std::to_string(nonzero_self) + " non-zero KL(theta, theta)");

  int changed = 0;
  for (int t = 0; t < 100; ++t) {
    grpo::GrpoConfig cfg;
    cfg.kl_coeff = 0.0;
    const auto theta = checks::random_params(rng, 32);
    std::vector<grpo::GroupBatch> batch(1);
    batch[0].prompt = std::make_shared<policy::EncodedPrompt>(checks::random_prompt(rng, 6, 32));
    for (const auto& s : policy::sample_group(theta, *batch[0].prompt, 8, 1.0, rng.next_u64())) {
      batch[0].responses.push_back({s.index, s.logprob});
      batch[0].rewards.push_back(rng.coin() ? 1.0 : -0.5);
    }
    batch[0].advantages = grpo::group_advantages(batch[0].rewards, 1e-8);
    const auto near = grpo::grpo_objective(theta, theta, batch, cfg);
    const auto far = grpo::grpo_objective(theta, checks::random_params(rng, 32, 5.0), batch, cfg);
    changed += !(far.value == -far.surrogate && far.value == near.value && far.grad == near.grad && far.kl > 0.0);
  }
  o.check(changed == 0, "beta = 0: objective and gradient unchanged by the KL term in 100/100 batches");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string cli, workdir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--cli", cli, "Path to the actforge binary")->required();
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"reward table exactness", reward_table},
      {"advantage properties", advantage_properties},
      {"gradient correctness", gradient_correctness},
      {"critic data construction", data_construction},
      {"ACT stage efficacy", act_efficacy},
      {"IL efficacy", il_efficacy},
      {"RL action stage", rl_action_stage},
      {"directional reproduction", directional},
      {"determinism", [&] { return determinism(cli, workdir); }},
      {"KL properties", kl_properties},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::string notes;
    for (const auto& n : o.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << notes << " ("
              << fmt("%.1f s", seconds_since(t0)) << ")" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}

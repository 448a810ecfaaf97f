// actforge: data generation, training, evaluation and reporting.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "actforge/actdata.hpp"
#include "actforge/errors.hpp"
#include "actforge/evaluation.hpp"
#include "actforge/policy.hpp"
#include "actforge/textenv.hpp"
#include "actforge/trainers.hpp"

namespace fs = std::filesystem;
using namespace actforge;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
  const char* v = std::getenv("ACTFORGE_SEED");
  if (!v || !*v) return 0;
  try {
    std::size_t pos = 0;
    const auto s = std::stoull(v, &pos);
    if (pos != std::string(v).size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw UsageError(std::string("ACTFORGE_SEED is not an unsigned integer: ") + v);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(int argc, char** argv) {
  CLI::App app{"Critic-pair construction, GRPO/imitation training and evaluation on text environments"};
  app.require_subcommand(1);
  const std::uint64_t env_seed = default_seed();

  // gen-config
  std::string gc_env = "gridhouse", gc_out;
  std::uint64_t gc_seed = env_seed;
  int gc_id = -1, gc_ood = -1;
  auto* gen_config = app.add_subcommand("gen-config", "Generate an environment registry");
  gen_config->add_option("--env", gc_env, "gridhouse | shopsim")->check(CLI::IsMember({"gridhouse", "shopsim"}));
  gen_config->add_option("--seed", gc_seed, "Generator seed");
  gen_config->add_option("--id-layouts", gc_id, "ID layouts (or catalogs)");
  gen_config->add_option("--ood-layouts", gc_ood, "OOD layouts (or catalogs)");
  gen_config->add_option("--out", gc_out, "Output JSON path")->required();

  // gen-expert
  std::string ge_env, ge_out;
  int ge_tasks = 0;
  std::uint64_t ge_seed = env_seed;
  auto* gen_expert = app.add_subcommand("gen-expert", "Roll the scripted expert into an expert dataset");
  gen_expert->add_option("--env", ge_env, "Environment registry JSON")->required();
  gen_expert->add_option("--tasks", ge_tasks, "Number of ID tasks")->required();
  gen_expert->add_option("--seed", ge_seed, "Sampling seed");
  gen_expert->add_option("--out", ge_out, "Output JSONL path")->required();

  // build-critic
  std::string bc_expert, bc_policy, bc_out;
  int bc_k = 1;
  double bc_temp = 1.0;
  std::size_t bc_dim = policy::kDefaultDim;
  std::uint64_t bc_seed = env_seed;
  auto* build_critic = app.add_subcommand("build-critic", "Pair expert actions with sampled alternatives");
  build_critic->add_option("--expert", bc_expert, "Expert dataset JSONL")->required();
  build_critic->add_option("--policy", bc_policy, "Initial policy checkpoint (default: uniform)");
  build_critic->add_option("--dim", bc_dim, "Feature dimension of the uniform policy");
  build_critic->add_option("--k", bc_k, "Alternatives drawn per record");
  build_critic->add_option("--temperature", bc_temp, "Sampling temperature");
  build_critic->add_option("--seed", bc_seed, "Sampling seed");
  build_critic->add_option("--out", bc_out, "Output JSONL path")->required();

  // train
  std::string tr_variant, tr_config;
  std::vector<std::string> tr_sets;
  auto* train = app.add_subcommand("train", "Run a training pipeline");
  train->add_option("--variant", tr_variant, "none | il | rl | act | il-act | rl-act");
  train->add_option("--config", tr_config, "Pipeline JSON")->required();
  train->add_option("--set", tr_sets, "Override key=value (dotted keys)");

  // eval
  std::string ev_ckpt, ev_env, ev_split = "both", ev_out, ev_variant, ev_expert, ev_critic;
  int ev_episodes = 0, ev_max_steps = 0;
  std::vector<std::uint64_t> ev_seeds;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
  eval->add_option("--env", ev_env, "Environment registry JSON")->required();
  eval->add_option("--split", ev_split, "id | ood | both")->check(CLI::IsMember({"id", "ood", "both"}));
  eval->add_option("--episodes", ev_episodes, "Episodes per split and seed (default 140 ID / 134 OOD)");
  eval->add_option("--seed", ev_seeds, "Evaluation seed(s)");
  eval->add_option("--max-steps", ev_max_steps, "Episode step limit (default: registry)");
  eval->add_option("--variant", ev_variant, "Label for the report (default: checkpoint file stem)");
  eval->add_option("--expert", ev_expert, "Held-out expert dataset for next-action accuracy");
  eval->add_option("--critic", ev_critic, "Held-out critic dataset for critic accuracy");
  eval->add_option("--out", ev_out, "Output directory")->required();

  // report
  std::vector<std::string> rp_runs;
  std::string rp_out;
  auto* report = app.add_subcommand("report", "Merge run reports into one comparison");
  report->add_option("--runs", rp_runs, "Run or evaluation directories")->required();
  report->add_option("--out", rp_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*gen_config) {
    textenv::EnvConfig cfg;
    if (gc_env == "gridhouse") {
      textenv::GridHouseGenOptions o;
      if (gc_id >= 0) o.id_layouts = gc_id;
      if (gc_ood >= 0) o.ood_layouts = gc_ood;
      cfg = textenv::generate_gridhouse(gc_seed, o);
    } else {
      textenv::ShopSimGenOptions o;
      if (gc_id >= 0) o.id_catalogs = gc_id;
      if (gc_ood >= 0) o.ood_catalogs = gc_ood;
      cfg = textenv::generate_shopsim(gc_seed, o);
    }
    textenv::save_env_config(cfg, gc_out);
    std::cout << "wrote " << cfg.tasks.size() << " tasks to " << gc_out << "\n";
  } else if (*gen_expert) {
    if (ge_tasks < 1) throw UsageError("--tasks must be >= 1");
    const auto cfg = textenv::load_env_config(ge_env);
    const auto ds = textenv::generate_demonstrations(cfg, ge_tasks, ge_seed);
    textenv::write_expert_dataset(ds, ge_out);
    std::cout << "wrote " << ds.records.size() << " records to " << ge_out << "\n";
  } else if (*build_critic) {
    if (bc_k < 1) throw UsageError("--k must be >= 1");
    const auto expert = textenv::read_expert_dataset(bc_expert);
    const auto p0 = bc_policy.empty() ? policy::PolicyParams(bc_dim, bc_seed) : policy::load_checkpoint(bc_policy);
    const auto critic = actdata::build_critic_dataset(expert, p0, {bc_k, bc_temp, bc_seed});
    actdata::write_dataset(critic, bc_out);
    std::cout << "wrote " << critic.size() << " pairs to " << bc_out << "\n";
  } else if (*train) {
    if (!tr_variant.empty()) {
      try {
        trainers::parse_variant(tr_variant);
      } catch (const ConfigError& e) {
        throw UsageError(e.what());
      }
    }
    std::vector<std::string> overrides;
    const auto root = nlohmann::json::parse(read_file(tr_config), nullptr, false);
    if (root.is_object() && !root.contains("seed") && std::getenv("ACTFORGE_SEED"))
      overrides.push_back("seed=" + std::to_string(env_seed));
    if (!tr_variant.empty()) overrides.push_back("variant=\"" + tr_variant + "\"");
    overrides.insert(overrides.end(), tr_sets.begin(), tr_sets.end());
    const auto config = trainers::load_pipeline_config(tr_config, overrides);
    const auto art = trainers::run_pipeline(config);
    for (const auto& s : art.stages) std::cout << "stage " << s.stage << ": " << s.checkpoint << "\n";
    if (!art.report.empty()) std::cout << "report: " << art.report << "\n";
    std::cout << "manifest: " << art.manifest << "\n";
  } else if (*eval) {
    const auto cfg = textenv::load_env_config(ev_env);
    const auto params = policy::load_checkpoint(ev_ckpt);
    if (ev_seeds.empty()) ev_seeds.push_back(env_seed);
    if (ev_episodes < 0) throw UsageError("--episodes must be >= 1");
    const bool id = ev_split != "ood", ood = ev_split != "id";
    const int id_eps = ev_episodes > 0 ? ev_episodes : 140;
    const int ood_eps = ev_episodes > 0 ? ev_episodes : 134;
    const std::string label = ev_variant.empty() ? fs::path(ev_ckpt).stem().string() : ev_variant;
    auto run = evaluation::evaluate_model(params, cfg, label, id, ood, id_eps, ood_eps, ev_seeds, ev_max_steps);
    if (!ev_expert.empty())
      run.report.next_action_accuracy = evaluation::evaluate_next_action(params, textenv::read_expert_dataset(ev_expert));
    if (!ev_critic.empty()) {
      const auto critic = actdata::read_dataset(ev_critic);
      if (critic.empty()) throw DataError(ev_critic + " has no critic examples");
      run.report.critic_accuracy = evaluation::evaluate_critic_accuracy(params, critic);
    }
    evaluation::emit_report({run}, ev_out);
    std::cout << evaluation::report_to_json_text(run.report);
  } else if (*report) {
    std::vector<evaluation::EvalRun> runs;
    for (const auto& dir : rp_runs) {
      fs::path p = fs::path(dir) / "eval" / "report.json";
      if (!fs::exists(p)) p = fs::path(dir) / "report.json";
      if (!fs::exists(p)) throw DataError("no report.json under " + dir);
      for (auto& r : evaluation::read_reports(p.string())) runs.push_back({std::move(r), {}});
    }
    evaluation::emit_report(runs, rp_out);
    std::cout << "wrote " << runs.size() << " reports to " << rp_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

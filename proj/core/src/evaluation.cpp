#include "actforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "actforge/errors.hpp"
#include "actforge/rng.hpp"
#include "actforge/text.hpp"
#include "json_io.hpp"

namespace actforge::evaluation {

namespace fs = std::filesystem;
using jsonio::json;

AgentFn greedy_agent(const policy::PolicyParams& params) {
  return [&params](const textenv::Context& ctx, const textenv::WorldState&) {
    const auto prompt = policy::encode(policy::PromptSpec::action(ctx), params.dim());
    const auto& r = prompt.responses[policy::greedy_index(params, prompt)];
    return r.tagged ? r.action_text : std::string();
  };
}

AgentFn oracle_agent() {
  return [](const textenv::Context&, const textenv::WorldState& state) {
    return textenv::expert_action(state, state.task);
  };
}

SuccessResult evaluate_success(const AgentFn& agent, const textenv::EnvConfig& cfg, textenv::Split split,
                               int episodes, int max_steps, std::uint64_t seed) {
  if (episodes < 1) throw PreconditionError("episodes must be >= 1");
  auto pool = cfg.tasks_in(split);
  if (pool.empty())
    throw PreconditionError("registry has no " + std::string(textenv::to_string(split)) + " tasks");
  textenv::EnvConfig run_cfg = cfg;
  if (max_steps > 0) run_cfg.max_steps = max_steps;

  Rng rng(derive_seed(seed, 0x6576616c));
  std::vector<const textenv::Task*> order;
  SuccessResult out;
  out.episodes = episodes;
  for (int e = 0; e < episodes; ++e) {
    if (order.empty()) {
      order = pool;
      rng.shuffle(order);
      std::reverse(order.begin(), order.end());
    }
    const textenv::Task* task = order.back();
    order.pop_back();

    textenv::Episode ep(run_cfg, task->task_id, derive_seed(seed, static_cast<std::uint64_t>(e)));
    EpisodeTrace trace{task->task_id, task->layout_id, false, {}};
    while (!ep.done()) {
      const textenv::Context ctx = ep.context();
      std::string action = agent(ctx, ep.state());
      const auto r = ep.act(action);
      trace.steps.push_back({ctx, std::move(action), r.observation});
    }
    trace.success = ep.success();
    if (trace.success) ++out.successes;
    out.traces.push_back(std::move(trace));
  }
  out.success_rate = static_cast<double>(out.successes) / static_cast<double>(episodes);
  return out;
}

SuccessResult evaluate_success(const policy::PolicyParams& params, const textenv::EnvConfig& cfg,
                               textenv::Split split, int episodes, int max_steps, std::uint64_t seed) {
  return evaluate_success(greedy_agent(params), cfg, split, episodes, max_steps, seed);
}

namespace {

actdata::CriticExample maybe_flipped(const actdata::CriticExample& ex, bool flip) {
  if (!flip) return ex;
  auto copy = ex;
  copy.permutation_bit = 1 - copy.permutation_bit;
  return copy;
}

}  // namespace

double evaluate_critic_accuracy(const CriticChooser& chooser, const std::vector<actdata::CriticExample>& heldout,
                                bool flip_bits) {
  if (heldout.empty()) throw PreconditionError("held-out critic set is empty");
  std::size_t hits = 0;
  for (const auto& ex : heldout) {
    const std::string choice = chooser(maybe_flipped(ex, flip_bits).prompt());
    if (!choice.empty() && text::normalize(choice) == text::normalize(ex.a_plus)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(heldout.size());
}

double evaluate_critic_accuracy(const policy::PolicyParams& params,
                                const std::vector<actdata::CriticExample>& heldout, bool flip_bits) {
  return evaluate_critic_accuracy(
      [&params](const policy::PromptSpec& spec) {
        const auto prompt = policy::encode(spec, params.dim());
        const auto& r = prompt.responses[policy::greedy_index(params, prompt)];
        return r.tagged ? r.action_text : std::string();
      },
      heldout, flip_bits);
}

double critic_chance_rate(const std::vector<actdata::CriticExample>& heldout) {
  if (heldout.empty()) throw PreconditionError("held-out critic set is empty");
  double s = 0.0;
  for (const auto& ex : heldout) s += 1.0 / static_cast<double>(policy::response_set(ex.prompt()).size());
  return s / static_cast<double>(heldout.size());
}

double evaluate_next_action(const policy::PolicyParams& params, const textenv::ExpertDataset& heldout) {
  std::size_t n = 0, hits = 0;
  for (const auto& rec : heldout.records) {
    const auto prompt = policy::encode(policy::PromptSpec::action(rec.context), params.dim());
    if (!prompt.find(rec.expert_action)) continue;
    ++n;
    const auto& r = prompt.responses[policy::greedy_index(params, prompt)];
    if (r.tagged && text::normalize(r.action_text) == text::normalize(rec.expert_action)) ++hits;
  }
  if (n == 0) throw DataError("no evaluable records");
  return static_cast<double>(hits) / static_cast<double>(n);
}

void check_split_hygiene(const textenv::EnvConfig& cfg, const textenv::ExpertDataset& training) {
  std::set<std::string> train_layouts;
  for (const auto& r : training.records) train_layouts.insert(cfg.task(r.task_id).layout_id);
  for (const auto& id : cfg.layout_ids(textenv::Split::OOD))
    if (train_layouts.count(id)) throw DataError("OOD layout '" + id + "' appears in the training data");
}

// ---------------------------------------------------------------------------
// Reports

void aggregate(EvalReport& r) {
  auto stats = [&](auto pick) -> std::pair<std::optional<double>, std::optional<double>> {
    std::vector<double> v;
    for (const auto& s : r.per_seed)
      if (auto x = pick(s)) v.push_back(*x);
    if (v.empty()) return {std::nullopt, std::nullopt};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / static_cast<double>(v.size()))};
  };
  std::tie(r.id_success_rate, r.id_success_sd) = stats([](const SeedResult& s) { return s.id_success_rate; });
  std::tie(r.ood_success_rate, r.ood_success_sd) = stats([](const SeedResult& s) { return s.ood_success_rate; });
  r.seeds.clear();
  r.episodes = 0;
  for (const auto& s : r.per_seed) {
    r.seeds.push_back(s.seed);
    r.episodes += s.id_episodes + s.ood_episodes;
  }
}

namespace {

json opt_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from_json(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw DataError(std::string("bad field '") + key + "'");
  return it->get<double>();
}

json report_to_json(const EvalReport& r) {
  json per_seed = json::array();
  for (const auto& s : r.per_seed)
    per_seed.push_back({{"seed", s.seed},
                        {"id_success_rate", opt_to_json(s.id_success_rate)},
                        {"ood_success_rate", opt_to_json(s.ood_success_rate)},
                        {"id_successes", s.id_successes},
                        {"id_episodes", s.id_episodes},
                        {"ood_successes", s.ood_successes},
                        {"ood_episodes", s.ood_episodes}});
  return {{"variant", r.variant},
          {"env", r.env},
          {"id_success_rate", opt_to_json(r.id_success_rate)},
          {"ood_success_rate", opt_to_json(r.ood_success_rate)},
          {"id_success_sd", opt_to_json(r.id_success_sd)},
          {"ood_success_sd", opt_to_json(r.ood_success_sd)},
          {"critic_accuracy", opt_to_json(r.critic_accuracy)},
          {"next_action_accuracy", opt_to_json(r.next_action_accuracy)},
          {"episodes", r.episodes},
          {"seeds", r.seeds},
          {"per_seed", per_seed}};
}

EvalReport report_from_json(const json& j) {
  if (!j.is_object()) throw DataError("report is not an object");
  EvalReport r;
  r.variant = jsonio::get_field<std::string>(j, "variant");
  r.env = jsonio::get_field<std::string>(j, "env");
  r.id_success_rate = opt_from_json(j, "id_success_rate");
  r.ood_success_rate = opt_from_json(j, "ood_success_rate");
  r.id_success_sd = opt_from_json(j, "id_success_sd");
  r.ood_success_sd = opt_from_json(j, "ood_success_sd");
  r.critic_accuracy = opt_from_json(j, "critic_accuracy");
  r.next_action_accuracy = opt_from_json(j, "next_action_accuracy");
  r.episodes = jsonio::get_field<int>(j, "episodes");
  r.seeds = jsonio::get_field<std::vector<std::uint64_t>>(j, "seeds");
  auto it = j.find("per_seed");
  if (it == j.end() || !it->is_array()) throw DataError("missing field 'per_seed'");
  for (const auto& s : *it) {
    SeedResult x;
    x.seed = jsonio::get_field<std::uint64_t>(s, "seed");
    x.id_success_rate = opt_from_json(s, "id_success_rate");
    x.ood_success_rate = opt_from_json(s, "ood_success_rate");
    x.id_successes = jsonio::get_field<int>(s, "id_successes");
    x.id_episodes = jsonio::get_field<int>(s, "id_episodes");
    x.ood_successes = jsonio::get_field<int>(s, "ood_successes");
    x.ood_episodes = jsonio::get_field<int>(s, "ood_episodes");
    r.per_seed.push_back(x);
  }
  return r;
}

std::string csv_cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

json trace_to_json(const EpisodeTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps)
    steps.push_back(
        {{"context", jsonio::context_to_json(s.context)}, {"action", s.action}, {"observation", s.observation}});
  return {{"task_id", t.task_id}, {"layout_id", t.layout_id}, {"success", t.success}, {"steps", steps}};
}

}  // namespace

std::string report_to_json_text(const EvalReport& report) { return report_to_json(report).dump(2) + "\n"; }

EvalReport report_from_json_text(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(1, "report is not valid JSON");
  return report_from_json(j);
}

EvalRun evaluate_model(const policy::PolicyParams& params, const textenv::EnvConfig& cfg, const std::string& variant,
                       bool id, bool ood, int id_episodes, int ood_episodes, const std::vector<std::uint64_t>& seeds,
                       int max_steps) {
  if (seeds.empty()) throw PreconditionError("no evaluation seeds");
  EvalRun run;
  run.report.variant = variant;
  run.report.env = std::string(textenv::to_string(cfg.kind));
  const auto agent = greedy_agent(params);
  for (std::uint64_t seed : seeds) {
    SeedResult s;
    s.seed = seed;
    if (id) {
      auto r = evaluate_success(agent, cfg, textenv::Split::ID, id_episodes, max_steps, seed);
      s.id_success_rate = r.success_rate;
      s.id_successes = r.successes;
      s.id_episodes = r.episodes;
      run.traces["id-seed" + std::to_string(seed)] = std::move(r.traces);
    }
    if (ood) {
      auto r = evaluate_success(agent, cfg, textenv::Split::OOD, ood_episodes, max_steps, seed);
      s.ood_success_rate = r.success_rate;
      s.ood_successes = r.successes;
      s.ood_episodes = r.episodes;
      run.traces["ood-seed" + std::to_string(seed)] = std::move(r.traces);
    }
    run.report.per_seed.push_back(s);
  }
  aggregate(run.report);
  return run;
}

void emit_report(const std::vector<EvalRun>& runs, const std::string& out_dir) {
  if (runs.empty()) throw PreconditionError("no reports to emit");
  const fs::path out(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create '" + out_dir + "': " + ec.message());

  json all = json::array();
  std::string csv =
      "variant,env,id_success_rate,id_success_sd,ood_success_rate,ood_success_sd,critic_accuracy,"
      "next_action_accuracy,episodes,seeds\n";
  for (const auto& run : runs) {
    const auto& r = run.report;
    all.push_back(report_to_json(r));
    std::string seeds;
    for (std::size_t i = 0; i < r.seeds.size(); ++i) seeds += (i ? ";" : "") + std::to_string(r.seeds[i]);
    csv += r.variant + "," + r.env + "," + csv_cell(r.id_success_rate) + "," + csv_cell(r.id_success_sd) + "," +
           csv_cell(r.ood_success_rate) + "," + csv_cell(r.ood_success_sd) + "," + csv_cell(r.critic_accuracy) +
           "," + csv_cell(r.next_action_accuracy) + "," + std::to_string(r.episodes) + "," + seeds + "\n";
    for (const auto& [key, traces] : run.traces)
      jsonio::write_text_file((out / "traces" / r.variant / (key + ".jsonl")).string(), traces_to_jsonl(traces));
  }
  jsonio::write_text_file((out / "report.json").string(), json{{"reports", all}}.dump(2) + "\n");
  jsonio::write_text_file((out / "comparison.csv").string(), csv);
}

std::vector<EvalReport> read_reports(const std::string& path) {
  const json j = json::parse(jsonio::read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw ParseError(1, path + " is not valid JSON");
  auto it = j.find("reports");
  if (it == j.end() || !it->is_array()) throw DataError(path + ": missing 'reports' array");
  std::vector<EvalReport> out;
  for (const auto& r : *it) out.push_back(report_from_json(r));
  return out;
}

std::string traces_to_jsonl(const std::vector<EpisodeTrace>& traces) {
  std::string out;
  for (const auto& t : traces) {
    out += jsonio::dump_line(trace_to_json(t));
    out += '\n';
  }
  return out;
}

std::vector<EpisodeTrace> read_traces(const std::string& path) {
  std::vector<EpisodeTrace> out;
  for (const auto& [lineno, j] : jsonio::read_jsonl(path)) {
    try {
      EpisodeTrace t;
      t.task_id = jsonio::get_field<std::string>(j, "task_id");
      t.layout_id = jsonio::get_field<std::string>(j, "layout_id");
      t.success = jsonio::get_field<bool>(j, "success");
      auto sit = j.find("steps");
      if (sit == j.end() || !sit->is_array()) throw DataError("missing field 'steps'");
      for (const auto& s : *sit) {
        auto cit = s.find("context");
        if (cit == s.end()) throw DataError("missing field 'context'");
        t.steps.push_back({jsonio::context_from_json(*cit), jsonio::get_field<std::string>(s, "action"),
                           jsonio::get_field<std::string>(s, "observation")});
      }
      out.push_back(std::move(t));
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

}  // namespace actforge::evaluation

#include "actforge/textenv.hpp"

#include <algorithm>
#include <set>

#include "actforge/errors.hpp"
#include "actforge/rng.hpp"
#include "actforge/text.hpp"
#include "json_io.hpp"
#include "textenv_internal.hpp"

namespace actforge::textenv {

void WorldState::check_invariants() const {
  if (step_count < 0 || step_count > max_steps)
    throw PreconditionError("step_count " + std::to_string(step_count) + " outside [0, max_steps]");
  if (kind() != EnvKind::GridHouse) return;
  const auto& h = house_state();
  std::set<std::string> seen;
  for (const auto& [obj, rec] : h.object_locations) {
    if (!house->find_receptacle(rec)) throw PreconditionError(obj + " in unknown receptacle " + rec);
    seen.insert(obj);
  }
  if (h.holding) {
    if (seen.count(*h.holding)) throw PreconditionError(*h.holding + " both held and placed");
    seen.insert(*h.holding);
  }
  if (seen.size() != house->objects.size()) throw PreconditionError("object placement is not a partition");
}

std::pair<WorldState, Context> reset(const EnvConfig& cfg, std::string_view task_id, std::uint64_t /*seed*/) {
  const Task& task = cfg.task(task_id);
  WorldState s;
  s.layout_id = task.layout_id;
  s.task = task;
  s.max_steps = cfg.max_steps;
  if (cfg.kind == EnvKind::GridHouse) {
    s.house = cfg.house_layout(task.layout_id);
    s.detail = detail::house_initial_state(*s.house);
  } else {
    s.shop = cfg.catalog(task.layout_id);
    s.detail = ShopState{};
  }
  Context ctx = build_context(s, task, {}, cfg.history_window, initial_observation(s));
  return {std::move(s), std::move(ctx)};
}

std::vector<std::string> admissible_actions(const WorldState& state) {
  return state.kind() == EnvKind::GridHouse ? detail::house_admissible(state) : detail::shop_admissible(state);
}

bool goal_satisfied(const WorldState& state) {
  return state.kind() == EnvKind::GridHouse ? detail::house_goal_satisfied(state)
                                            : detail::shop_goal_satisfied(state);
}

namespace {

bool terminal(const WorldState& s) {
  if (s.step_count >= s.max_steps) return true;
  if (goal_satisfied(s)) return true;
  return s.kind() == EnvKind::ShopSim && detail::shop_terminal(s);
}

}  // namespace

std::pair<WorldState, StepResult> step(const WorldState& state, std::string_view action_text) {
  WorldState next = state;
  if (terminal(state)) {
    return {std::move(next), StepResult{std::string(kNothingHappens), true, goal_satisfied(state)}};
  }
  const std::string a = text::normalize(action_text);
  auto outcome = next.kind() == EnvKind::GridHouse ? detail::house_apply(next, a) : detail::shop_apply(next, a);
  ++next.step_count;
  StepResult r;
  r.observation = std::move(outcome.observation);
  r.success = goal_satisfied(next);
  r.done = terminal(next);
  return {std::move(next), std::move(r)};
}

std::string expert_action(const WorldState& state, const Task& task) {
  return state.kind() == EnvKind::GridHouse ? detail::house_expert(state, task) : detail::shop_expert(state, task);
}

std::string initial_observation(const WorldState& state) {
  return state.kind() == EnvKind::GridHouse ? detail::house_initial_observation(state)
                                            : detail::shop_initial_observation(state);
}

Context build_context(const WorldState& state, const Task& task, const std::vector<HistoryEntry>& history, int k,
                      std::string_view current_observation) {
  if (k < 0) throw PreconditionError("history window k must be >= 0");
  Context c;
  c.task_description = task.description;
  const std::size_t keep = std::min<std::size_t>(history.size(), static_cast<std::size_t>(k));
  c.history.assign(history.end() - static_cast<std::ptrdiff_t>(keep), history.end());
  c.current_observation = std::string(current_observation);
  c.admissible_actions = admissible_actions(state);
  c.step_index = state.step_count;
  return c;
}

Episode::Episode(const EnvConfig& cfg, std::string_view task_id, std::uint64_t seed) : k_(cfg.history_window) {
  auto [s, ctx] = reset(cfg, task_id, seed);
  state_ = std::move(s);
  context_ = std::move(ctx);
}

StepResult Episode::act(std::string_view action_text) {
  auto [next, result] = step(state_, action_text);
  history_.push_back({context_.current_observation, std::string(action_text)});
  state_ = std::move(next);
  done_ = result.done;
  success_ = result.success;
  if (!done_) context_ = build_context(state_, state_.task, history_, k_, result.observation);
  return result;
}

// ---------------------------------------------------------------------------

ExpertDataset generate_demonstrations_for(const EnvConfig& cfg, const std::vector<std::string>& task_ids,
                                          std::uint64_t seed) {
  ExpertDataset ds;
  ds.provenance = {seed, cfg.content_hash(), static_cast<int>(task_ids.size())};
  for (std::size_t i = 0; i < task_ids.size(); ++i) {
    Episode ep(cfg, task_ids[i], derive_seed(seed, i));
    while (!ep.done()) {
      const std::string a = expert_action(ep.state(), ep.task());
      ds.records.push_back({ep.task().task_id, ep.context().step_index, ep.context(), a});
      ep.act(a);
    }
    if (!ep.success())
      throw PlanningError("expert failed to solve " + task_ids[i] + " within " + std::to_string(cfg.max_steps) +
                          " steps");
  }
  return ds;
}

ExpertDataset generate_demonstrations(const EnvConfig& cfg, int n_tasks, std::uint64_t seed) {
  if (n_tasks < 1) throw ConfigError("n_tasks must be >= 1");
  auto pool = cfg.tasks_in(Split::ID);
  if (pool.empty()) throw ConfigError("registry has no ID tasks");
  Rng rng(derive_seed(seed, 0x6465'6d6f));
  std::vector<std::string> chosen;
  std::vector<const Task*> order;
  while (chosen.size() < static_cast<std::size_t>(n_tasks)) {
    if (order.empty()) {
      order = pool;
      rng.shuffle(order);
    }
    chosen.push_back(order.front()->task_id);
    order.erase(order.begin());
  }
  auto ds = generate_demonstrations_for(cfg, chosen, seed);
  ds.provenance.n_tasks = n_tasks;
  return ds;
}

std::vector<std::string> heldout_task_ids(const EnvConfig& cfg, const ExpertDataset& dataset) {
  std::set<std::string> used;
  for (const auto& r : dataset.records) used.insert(r.task_id);
  std::vector<std::string> out;
  for (const Task* t : cfg.tasks_in(Split::ID))
    if (!used.count(t->task_id)) out.push_back(t->task_id);
  return out;
}

std::string expert_dataset_to_jsonl(const ExpertDataset& ds) {
  std::string out;
  for (const auto& r : ds.records) {
    jsonio::json j{{"task_id", r.task_id},
                   {"step_index", r.step_index},
                   {"context", jsonio::context_to_json(r.context)},
                   {"expert_action", r.expert_action}};
    out += jsonio::dump_line(j);
    out += '\n';
  }
  return out;
}

void write_expert_dataset(const ExpertDataset& ds, const std::string& path) {
  jsonio::write_text_file(path, expert_dataset_to_jsonl(ds));
  jsonio::json meta{{"seed", ds.provenance.seed},
                    {"env_config_hash", ds.provenance.env_config_hash},
                    {"n_tasks", ds.provenance.n_tasks}};
  jsonio::write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

ExpertDataset read_expert_dataset(const std::string& path) {
  ExpertDataset ds;
  for (const auto& [lineno, j] : jsonio::read_jsonl(path)) {
    try {
      ExpertRecord r;
      r.task_id = jsonio::get_field<std::string>(j, "task_id");
      r.step_index = jsonio::get_field<int>(j, "step_index");
      auto cit = j.find("context");
      if (cit == j.end()) throw DataError("missing field 'context'");
      r.context = jsonio::context_from_json(*cit);
      r.expert_action = jsonio::get_field<std::string>(j, "expert_action");
      const auto na = text::normalize(r.expert_action);
      const bool admissible = std::any_of(r.context.admissible_actions.begin(), r.context.admissible_actions.end(),
                                          [&](const std::string& x) { return text::normalize(x) == na; });
      if (!admissible) throw DataError("expert_action '" + r.expert_action + "' not admissible");
      ds.records.push_back(std::move(r));
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  const std::string meta_path = path + ".meta.json";
  if (std::FILE* f = std::fopen(meta_path.c_str(), "rb")) {
    std::fclose(f);
    const auto meta = jsonio::json::parse(jsonio::read_text_file(meta_path), nullptr, false);
    if (meta.is_object()) {
      ds.provenance.seed = meta.value("seed", std::uint64_t{0});
      ds.provenance.env_config_hash = meta.value("env_config_hash", std::string{});
      ds.provenance.n_tasks = meta.value("n_tasks", 0);
    }
  }
  return ds;
}

}  // namespace actforge::textenv

#pragma once

// Deterministic text environments: GridHouse (household pick/process/place
// tasks) and ShopSim (search-and-buy), a scripted expert for each, and the
// demonstration generator that produces ExpertDataset records.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace actforge::textenv {

inline constexpr std::string_view kNothingHappens = "Nothing happens.";

enum class Split { ID, OOD };
enum class EnvKind { GridHouse, ShopSim };

std::string_view to_string(Split s);
std::string_view to_string(EnvKind k);
Split parse_split(std::string_view s);
EnvKind parse_env_kind(std::string_view s);

// ---------------------------------------------------------------------------
// Registry

struct Receptacle {
  std::string name;  // "cabinet 1"
  std::string type;  // "cabinet"
  bool openable = false;
};

struct ObjectPlacement {
  std::string name;          // "cloth 1"
  std::string object_class;  // "cloth"
  std::string receptacle;    // "countertop 1"
};

struct HouseLayout {
  std::string id;
  Split split = Split::ID;
  std::vector<Receptacle> receptacles;
  std::vector<ObjectPlacement> objects;

  const Receptacle* find_receptacle(std::string_view name) const;
};

struct Product {
  std::string name;                  // "cotton shirt"
  std::vector<std::string> options;  // "red", "blue", ...
};

struct ShopCatalog {
  std::string id;
  Split split = Split::ID;
  std::vector<Product> products;

  const Product* find_product(std::string_view name) const;
};

enum class TaskFamily {
  PickPlace,
  PickCleanPlace,
  PickHeatPlace,
  PickCleanHeatPlace,
  PickHold,
  PickCleanHold,
  ShopPurchase,
};

std::string_view to_string(TaskFamily f);
TaskFamily parse_task_family(std::string_view s);

/// GridHouse: an object of `object_class` in/on `target` (or held, when
/// `target` is empty) with the required flags. ShopSim: purchase of product
/// `object_class` with option `target`.
struct Goal {
  std::string object_class;
  std::string target;
  bool need_clean = false;
  bool need_hot = false;

  bool operator==(const Goal&) const = default;
};

struct Task {
  std::string task_id;
  std::string layout_id;
  TaskFamily family = TaskFamily::PickPlace;
  Goal goal;
  std::string description;
  Split split = Split::ID;
};

/// Environment registry. Loaded from JSON; every task is checked for
/// feasibility by the scripted expert when the registry is built.
class EnvConfig {
 public:
  EnvKind kind = EnvKind::GridHouse;
  int max_steps = 30;
  int history_window = 3;
  double gamma = 0.99;  // stored for completeness; nothing consumes it

  std::vector<std::shared_ptr<const HouseLayout>> house_layouts;
  std::vector<std::shared_ptr<const ShopCatalog>> catalogs;
  std::vector<Task> tasks;

  /// Throws ConfigError for unknown ids.
  const Task& task(std::string_view task_id) const;
  std::shared_ptr<const HouseLayout> house_layout(std::string_view id) const;
  std::shared_ptr<const ShopCatalog> catalog(std::string_view id) const;

  std::vector<const Task*> tasks_in(Split split) const;
  std::vector<std::string> layout_ids(Split split) const;

  /// Rejects duplicate ids, dangling layout references, split mismatches,
  /// and any task the scripted expert cannot solve within max_steps.
  void validate() const;

  /// Stable content hash of the canonical JSON form.
  std::string content_hash() const;
};

EnvConfig load_env_config(const std::string& path);
EnvConfig env_config_from_json_text(const std::string& json_text);
std::string env_config_to_json_text(const EnvConfig& cfg);
void save_env_config(const EnvConfig& cfg, const std::string& path);

struct GridHouseGenOptions {
  int id_layouts = 192;
  int ood_layouts = 24;
  int max_steps = 30;
  int history_window = 3;
};

struct ShopSimGenOptions {
  int id_catalogs = 12;
  int ood_catalogs = 12;
  int tasks_per_catalog = 6;
  int max_steps = 15;
  int history_window = 3;
};

/// Samples a registry. ID layouts place each object class only in its home
/// receptacle type; OOD layouts only use pairings never seen in ID.
EnvConfig generate_gridhouse(std::uint64_t seed, const GridHouseGenOptions& opts = {});
EnvConfig generate_shopsim(std::uint64_t seed, const ShopSimGenOptions& opts = {});

// ---------------------------------------------------------------------------
// State

struct ObjectFlags {
  bool clean = false;
  bool heated = false;

  bool operator==(const ObjectFlags&) const = default;
  auto operator<=>(const ObjectFlags&) const = default;
};

inline constexpr std::string_view kRoomCenter = "middle of room";

struct HouseState {
  std::string agent_location{kRoomCenter};
  std::optional<std::string> holding;
  std::map<std::string, std::string> object_locations;  // object -> receptacle
  std::map<std::string, ObjectFlags> object_flags;
  std::map<std::string, bool> receptacle_open;

  bool operator==(const HouseState&) const = default;
  auto operator<=>(const HouseState&) const = default;
};

enum class ShopPage { Search, Results, Item, Done };

struct ShopState {
  ShopPage page = ShopPage::Search;
  std::string query;
  std::vector<std::string> results;
  std::string item;
  std::string option;
  bool purchased = false;

  bool operator==(const ShopState&) const = default;
};

/// Full (hidden) world state. The layout and task are shared immutable
/// values; the mutable part lives in `detail`.
struct WorldState {
  std::string layout_id;
  std::shared_ptr<const HouseLayout> house;
  std::shared_ptr<const ShopCatalog> shop;
  Task task;
  int step_count = 0;
  int max_steps = 30;
  std::variant<HouseState, ShopState> detail;

  EnvKind kind() const { return shop ? EnvKind::ShopSim : EnvKind::GridHouse; }
  const HouseState& house_state() const { return std::get<HouseState>(detail); }
  const ShopState& shop_state() const { return std::get<ShopState>(detail); }

  /// Checks the structural invariants; throws PreconditionError on violation.
  void check_invariants() const;
};

struct HistoryEntry {
  std::string observation;
  std::string action;

  bool operator==(const HistoryEntry&) const = default;
};

struct Context {
  std::string task_description;
  std::vector<HistoryEntry> history;  // most recent last, at most k entries
  std::string current_observation;
  std::vector<std::string> admissible_actions;
  int step_index = 0;

  bool operator==(const Context&) const = default;
};

struct StepResult {
  std::string observation;
  bool done = false;
  bool success = false;
};

// ---------------------------------------------------------------------------
// Operations

/// Initial state and context for a registered task. The seed is accepted for
/// interface stability; layouts are fixed by the registry so it does not
/// alter the result.
std::pair<WorldState, Context> reset(const EnvConfig& cfg, std::string_view task_id,
                                     std::uint64_t seed);

/// Applies `action_text` if its normalized form is admissible; otherwise the
/// world is unchanged, the step counter advances, and the observation is
/// exactly "Nothing happens.". ShopSim additionally accepts any
/// "search[...]" query on the search page.
std::pair<WorldState, StepResult> step(const WorldState& state, std::string_view action_text);

std::vector<std::string> admissible_actions(const WorldState& state);

bool goal_satisfied(const WorldState& state);

/// Next action of the scripted plan (locate, take, process, deliver).
/// Throws PlanningError when the goal is already met or cannot be reached.
std::string expert_action(const WorldState& state, const Task& task);

/// Observation rendered at reset.
std::string initial_observation(const WorldState& state);

Context build_context(const WorldState& state, const Task& task,
                      const std::vector<HistoryEntry>& history, int k,
                      std::string_view current_observation);

/// Tracks one episode: the world state, the full history and the latest
/// observation, and renders the windowed Context on demand.
class Episode {
 public:
  Episode(const EnvConfig& cfg, std::string_view task_id, std::uint64_t seed);

  const WorldState& state() const { return state_; }
  const Task& task() const { return state_.task; }
  const Context& context() const { return context_; }
  bool done() const { return done_; }
  bool success() const { return success_; }
  const std::vector<HistoryEntry>& full_history() const { return history_; }

  StepResult act(std::string_view action_text);

 private:
  WorldState state_;
  Context context_;
  std::vector<HistoryEntry> history_;
  int k_;
  bool done_ = false;
  bool success_ = false;
};

// ---------------------------------------------------------------------------
// Demonstrations

struct ExpertRecord {
  std::string task_id;
  int step_index = 0;
  Context context;
  std::string expert_action;

  bool operator==(const ExpertRecord&) const = default;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::string env_config_hash;
  int n_tasks = 0;

  bool operator==(const Provenance&) const = default;
};

struct ExpertDataset {
  std::vector<ExpertRecord> records;
  Provenance provenance;

  bool operator==(const ExpertDataset&) const = default;
};

/// Rolls the expert in `n_tasks` ID tasks sampled (without replacement while
/// possible) by `seed`; one record per step.
ExpertDataset generate_demonstrations(const EnvConfig& cfg, int n_tasks, std::uint64_t seed);

/// Same, over an explicit task list (each task rolled once, in order).
ExpertDataset generate_demonstrations_for(const EnvConfig& cfg,
                                          const std::vector<std::string>& task_ids,
                                          std::uint64_t seed);

/// ID task ids not used by `dataset`.
std::vector<std::string> heldout_task_ids(const EnvConfig& cfg, const ExpertDataset& dataset);

/// JSONL, one record per line; provenance goes to `<path>.meta.json`.
void write_expert_dataset(const ExpertDataset& ds, const std::string& path);
ExpertDataset read_expert_dataset(const std::string& path);
std::string expert_dataset_to_jsonl(const ExpertDataset& ds);

}  // namespace actforge::textenv

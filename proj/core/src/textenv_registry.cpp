#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

#include "actforge/errors.hpp"
#include "actforge/hashing.hpp"
#include "actforge/rng.hpp"
#include "json_io.hpp"
#include "textenv_internal.hpp"

namespace actforge::textenv {

using jsonio::get_field;
using jsonio::json;

std::string_view to_string(Split s) { return s == Split::ID ? "id" : "ood"; }

std::string_view to_string(EnvKind k) { return k == EnvKind::GridHouse ? "gridhouse" : "shopsim"; }

Split parse_split(std::string_view s) {
  if (s == "id" || s == "ID") return Split::ID;
  if (s == "ood" || s == "OOD") return Split::OOD;
  throw ConfigError("unknown split '" + std::string(s) + "'");
}

EnvKind parse_env_kind(std::string_view s) {
  if (s == "gridhouse" || s == "GridHouse") return EnvKind::GridHouse;
  if (s == "shopsim" || s == "ShopSim") return EnvKind::ShopSim;
  throw ConfigError("unknown env '" + std::string(s) + "'");
}

namespace {

constexpr std::array<std::pair<TaskFamily, std::string_view>, 7> kFamilies{{
    {TaskFamily::PickPlace, "pick_place"},
    {TaskFamily::PickCleanPlace, "pick_clean_place"},
    {TaskFamily::PickHeatPlace, "pick_heat_place"},
    {TaskFamily::PickCleanHeatPlace, "pick_clean_heat_place"},
    {TaskFamily::PickHold, "pick_hold"},
    {TaskFamily::PickCleanHold, "pick_clean_hold"},
    {TaskFamily::ShopPurchase, "shop_purchase"},
}};

}  // namespace

std::string_view to_string(TaskFamily f) {
  for (const auto& [fam, name] : kFamilies)
    if (fam == f) return name;
  return "unknown";
}

TaskFamily parse_task_family(std::string_view s) {
  for (const auto& [fam, name] : kFamilies)
    if (name == s) return fam;
  throw ConfigError("unknown task family '" + std::string(s) + "'");
}

const Receptacle* HouseLayout::find_receptacle(std::string_view name) const {
  for (const auto& r : receptacles)
    if (r.name == name) return &r;
  return nullptr;
}

const Product* ShopCatalog::find_product(std::string_view name) const {
  for (const auto& p : products)
    if (p.name == name) return &p;
  return nullptr;
}

const Task& EnvConfig::task(std::string_view task_id) const {
  for (const auto& t : tasks)
    if (t.task_id == task_id) return t;
  throw ConfigError("unknown task_id '" + std::string(task_id) + "'");
}

std::shared_ptr<const HouseLayout> EnvConfig::house_layout(std::string_view id) const {
  for (const auto& l : house_layouts)
    if (l->id == id) return l;
  throw ConfigError("unknown layout '" + std::string(id) + "'");
}

std::shared_ptr<const ShopCatalog> EnvConfig::catalog(std::string_view id) const {
  for (const auto& c : catalogs)
    if (c->id == id) return c;
  throw ConfigError("unknown catalog '" + std::string(id) + "'");
}

std::vector<const Task*> EnvConfig::tasks_in(Split split) const {
  std::vector<const Task*> out;
  for (const auto& t : tasks)
    if (t.split == split) out.push_back(&t);
  return out;
}

std::vector<std::string> EnvConfig::layout_ids(Split split) const {
  std::vector<std::string> out;
  for (const auto& l : house_layouts)
    if (l->split == split) out.push_back(l->id);
  for (const auto& c : catalogs)
    if (c->split == split) out.push_back(c->id);
  return out;
}

void EnvConfig::validate() const {
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (history_window < 0) throw ConfigError("history_window must be >= 0");

  std::set<std::string> layout_ids_seen;
  std::map<std::string, Split> layout_split;
  for (const auto& l : house_layouts) {
    if (!layout_ids_seen.insert(l->id).second) throw ConfigError("duplicate layout id " + l->id);
    layout_split[l->id] = l->split;
    std::set<std::string> names;
    for (const auto& r : l->receptacles)
      if (!names.insert(r.name).second) throw ConfigError("duplicate receptacle " + r.name + " in " + l->id);
    for (const auto& o : l->objects) {
      if (!names.insert(o.name).second) throw ConfigError("duplicate name " + o.name + " in " + l->id);
      if (!l->find_receptacle(o.receptacle))
        throw ConfigError("object " + o.name + " placed in unknown receptacle " + o.receptacle);
    }
  }
  for (const auto& c : catalogs) {
    if (!layout_ids_seen.insert(c->id).second) throw ConfigError("duplicate catalog id " + c->id);
    layout_split[c->id] = c->split;
  }
  if (kind == EnvKind::GridHouse && !catalogs.empty()) throw ConfigError("gridhouse registry lists catalogs");
  if (kind == EnvKind::ShopSim && !house_layouts.empty()) throw ConfigError("shopsim registry lists layouts");

  std::set<std::string> task_ids;
  for (const auto& t : tasks) {
    if (!task_ids.insert(t.task_id).second) throw ConfigError("duplicate task id " + t.task_id);
    auto it = layout_split.find(t.layout_id);
    if (it == layout_split.end()) throw ConfigError("task " + t.task_id + " references unknown layout " + t.layout_id);
    if (it->second != t.split) throw ConfigError("task " + t.task_id + " split differs from its layout");
    // Feasibility: the scripted expert must reach the goal within max_steps.
    try {
      auto [state, ctx] = reset(*this, t.task_id, 0);
      if (goal_satisfied(state)) throw ConfigError("task " + t.task_id + " is satisfied at reset");
      StepResult r;
      while (!r.done) {
        auto next = step(state, expert_action(state, t));
        state = std::move(next.first);
        r = std::move(next.second);
      }
      if (!r.success) throw ConfigError("task " + t.task_id + " unreachable within max_steps");
    } catch (const PlanningError& e) {
      throw ConfigError("task " + t.task_id + " infeasible: " + e.what());
    }
  }
}

namespace {

json to_json(const EnvConfig& cfg) {
  json layouts = json::array();
  for (const auto& l : cfg.house_layouts) {
    json recs = json::array();
    for (const auto& r : l->receptacles) recs.push_back({{"name", r.name}, {"type", r.type}, {"openable", r.openable}});
    json objs = json::array();
    for (const auto& o : l->objects)
      objs.push_back({{"name", o.name}, {"class", o.object_class}, {"receptacle", o.receptacle}});
    layouts.push_back({{"id", l->id}, {"split", to_string(l->split)}, {"receptacles", recs}, {"objects", objs}});
  }
  json catalogs = json::array();
  for (const auto& c : cfg.catalogs) {
    json prods = json::array();
    for (const auto& p : c->products) prods.push_back({{"name", p.name}, {"options", p.options}});
    catalogs.push_back({{"id", c->id}, {"split", to_string(c->split)}, {"products", prods}});
  }
  json tasks = json::array();
  for (const auto& t : cfg.tasks) {
    tasks.push_back({{"task_id", t.task_id},
                     {"layout_id", t.layout_id},
                     {"family", to_string(t.family)},
                     {"goal",
                      {{"object_class", t.goal.object_class},
                       {"target", t.goal.target},
                       {"need_clean", t.goal.need_clean},
                       {"need_hot", t.goal.need_hot}}},
                     {"description", t.description},
                     {"split", to_string(t.split)}});
  }
  return json{{"env", to_string(cfg.kind)},
              {"max_steps", cfg.max_steps},
              {"history_window", cfg.history_window},
              {"gamma", cfg.gamma},
              {"layouts", layouts},
              {"catalogs", catalogs},
              {"tasks", tasks}};
}

EnvConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("registry root must be an object");
  EnvConfig cfg;
  try {
    cfg.kind = parse_env_kind(get_field<std::string>(j, "env"));
    cfg.max_steps = j.value("max_steps", 30);
    cfg.history_window = j.value("history_window", 3);
    cfg.gamma = j.value("gamma", 0.99);
    for (const auto& lj : j.value("layouts", json::array())) {
      HouseLayout l;
      l.id = get_field<std::string>(lj, "id");
      l.split = parse_split(get_field<std::string>(lj, "split"));
      for (const auto& rj : lj.at("receptacles"))
        l.receptacles.push_back(
            {get_field<std::string>(rj, "name"), get_field<std::string>(rj, "type"), rj.value("openable", false)});
      for (const auto& oj : lj.at("objects"))
        l.objects.push_back({get_field<std::string>(oj, "name"), get_field<std::string>(oj, "class"),
                             get_field<std::string>(oj, "receptacle")});
      cfg.house_layouts.push_back(std::make_shared<const HouseLayout>(std::move(l)));
    }
    for (const auto& cj : j.value("catalogs", json::array())) {
      ShopCatalog c;
      c.id = get_field<std::string>(cj, "id");
      c.split = parse_split(get_field<std::string>(cj, "split"));
      for (const auto& pj : cj.at("products"))
        c.products.push_back({get_field<std::string>(pj, "name"), get_field<std::vector<std::string>>(pj, "options")});
      cfg.catalogs.push_back(std::make_shared<const ShopCatalog>(std::move(c)));
    }
    for (const auto& tj : j.at("tasks")) {
      Task t;
      t.task_id = get_field<std::string>(tj, "task_id");
      t.layout_id = get_field<std::string>(tj, "layout_id");
      t.family = parse_task_family(get_field<std::string>(tj, "family"));
      const auto& gj = tj.at("goal");
      t.goal.object_class = get_field<std::string>(gj, "object_class");
      t.goal.target = gj.value("target", std::string{});
      t.goal.need_clean = gj.value("need_clean", false);
      t.goal.need_hot = gj.value("need_hot", false);
      t.description = get_field<std::string>(tj, "description");
      t.split = parse_split(get_field<std::string>(tj, "split"));
      cfg.tasks.push_back(std::move(t));
    }
  } catch (const DataError& e) {
    throw ConfigError(std::string("registry: ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("registry: ") + e.what());
  }
  return cfg;
}

}  // namespace

std::string env_config_to_json_text(const EnvConfig& cfg) { return to_json(cfg).dump(1) + "\n"; }

std::string EnvConfig::content_hash() const { return hex64(fnv1a64(to_json(*this).dump())); }

EnvConfig env_config_from_json_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("registry is not valid JSON: ") + e.what());
  }
  EnvConfig cfg = from_json(j);
  cfg.validate();
  return cfg;
}

EnvConfig load_env_config(const std::string& path) {
  std::string text;
  try {
    text = jsonio::read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return env_config_from_json_text(text);
}

void save_env_config(const EnvConfig& cfg, const std::string& path) {
  jsonio::write_text_file(path, env_config_to_json_text(cfg));
}

// ---------------------------------------------------------------------------
// Generators

namespace {

struct StorageType {
  std::string_view type;
  bool openable;
};

constexpr std::array<StorageType, 8> kStorage{{
    {"countertop", false},
    {"cabinet", true},
    {"drawer", true},
    {"shelf", false},
    {"diningtable", false},
    {"sidetable", false},
    {"fridge", true},
    {"dresser", false},
}};

// Each object class has one home receptacle type. ID layouts honor it; OOD
// layouts never do.
constexpr std::array<std::pair<std::string_view, std::string_view>, 12> kHome{{
    {"apple", "fridge"},
    {"tomato", "fridge"},
    {"egg", "fridge"},
    {"potato", "countertop"},
    {"bread", "countertop"},
    {"plate", "cabinet"},
    {"bowl", "cabinet"},
    {"mug", "shelf"},
    {"cup", "diningtable"},
    {"spatula", "drawer"},
    {"soapbar", "sidetable"},
    {"cloth", "dresser"},
}};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

std::string id_with_index(std::string_view prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", i);
  return std::string(prefix) + buf;
}

HouseLayout sample_layout(Rng& rng, const std::string& id, Split split) {
  for (;;) {
    std::vector<std::size_t> types(kStorage.size());
    for (std::size_t i = 0; i < types.size(); ++i) types[i] = i;
    rng.shuffle(types);
    const std::size_t n_storage = 2 + static_cast<std::size_t>(rng.below(3));
    types.resize(n_storage);

    HouseLayout l;
    l.id = id;
    l.split = split;
    for (std::size_t t : types)
      l.receptacles.push_back({std::string(kStorage[t].type) + " 1", std::string(kStorage[t].type), kStorage[t].openable});
    l.receptacles.push_back({"sinkbasin 1", "sinkbasin", false});
    l.receptacles.push_back({"microwave 1", "microwave", true});
    rng.shuffle(l.receptacles);

    // Candidate (class, receptacle) pairs allowed for this split.
    std::vector<std::pair<std::string, std::string>> candidates;
    for (const auto& [cls, home] : kHome) {
      std::vector<std::string> spots;
      for (std::size_t t : types) {
        const bool is_home = kStorage[t].type == home;
        if ((split == Split::ID) == is_home) spots.push_back(std::string(kStorage[t].type) + " 1");
      }
      if (!spots.empty()) candidates.emplace_back(std::string(cls), pick(rng, spots));
    }
    rng.shuffle(candidates);
    const std::size_t n_objects = 3 + static_cast<std::size_t>(rng.below(3));
    if (candidates.size() < n_objects) continue;
    candidates.resize(n_objects);
    for (const auto& [cls, rec] : candidates) l.objects.push_back({cls + " 1", cls, rec});
    return l;
  }
}

std::vector<Task> layout_tasks(Rng& rng, const HouseLayout& l) {
  std::vector<std::string> storage;
  for (const auto& r : l.receptacles)
    if (r.type != "sinkbasin" && r.type != "microwave") storage.push_back(r.name);

  auto type_of = [&](const std::string& rec) { return l.find_receptacle(rec)->type; };
  std::vector<Task> out;
  for (const auto& [family, fname] : kFamilies) {
    if (family == TaskFamily::ShopPurchase) continue;
    const ObjectPlacement& obj = l.objects[static_cast<std::size_t>(rng.below(l.objects.size()))];
    Task t;
    t.layout_id = l.id;
    t.split = l.split;
    t.family = family;
    t.goal.object_class = obj.object_class;
    t.goal.need_clean = family == TaskFamily::PickCleanPlace || family == TaskFamily::PickCleanHeatPlace ||
                        family == TaskFamily::PickCleanHold;
    t.goal.need_hot = family == TaskFamily::PickHeatPlace || family == TaskFamily::PickCleanHeatPlace;
    const bool hold = family == TaskFamily::PickHold || family == TaskFamily::PickCleanHold;
    if (!hold) {
      std::vector<std::string> targets;
      for (const auto& s : storage)
        if (family != TaskFamily::PickPlace || s != obj.receptacle) targets.push_back(s);
      t.goal.target = pick(rng, targets);
    }
    std::string adjective;
    if (t.goal.need_clean && t.goal.need_hot)
      adjective = "clean and hot ";
    else if (t.goal.need_clean)
      adjective = "clean ";
    else if (t.goal.need_hot)
      adjective = "hot ";
    if (hold) {
      t.description = (t.goal.need_clean ? "clean a " : "find a ") + obj.object_class + " and hold it.";
      t.task_id = std::string(t.goal.need_clean ? "hold-clean-" : "hold-") + obj.object_class + "-" + l.id;
    } else {
      t.description = "put a " + adjective + obj.object_class + " in/on " + t.goal.target + ".";
      std::string tag = t.goal.need_clean && t.goal.need_hot ? "cleanhot-" : t.goal.need_clean ? "clean-"
                                                                           : t.goal.need_hot    ? "hot-"
                                                                                                : "";
      t.task_id = "put-" + tag + obj.object_class + "-" + type_of(t.goal.target) + "-" + l.id;
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

EnvConfig generate_gridhouse(std::uint64_t seed, const GridHouseGenOptions& opts) {
  EnvConfig cfg;
  cfg.kind = EnvKind::GridHouse;
  cfg.max_steps = opts.max_steps;
  cfg.history_window = opts.history_window;
  Rng rng(derive_seed(seed, 0x6772'6964));
  for (Split split : {Split::ID, Split::OOD}) {
    const int n = split == Split::ID ? opts.id_layouts : opts.ood_layouts;
    for (int i = 0; i < n; ++i) {
      auto layout = sample_layout(rng, id_with_index(split == Split::ID ? "gh-id-" : "gh-ood-", i), split);
      for (auto& t : layout_tasks(rng, layout)) cfg.tasks.push_back(std::move(t));
      cfg.house_layouts.push_back(std::make_shared<const HouseLayout>(std::move(layout)));
    }
  }
  cfg.validate();
  return cfg;
}

namespace {

constexpr std::array<std::string_view, 8> kMaterials{"cotton", "linen", "wool", "leather",
                                                     "denim", "silk", "canvas", "suede"};
constexpr std::array<std::string_view, 8> kGoods{"shirt", "jacket", "boots", "scarf", "bag", "hat", "sneakers", "gloves"};
constexpr std::array<std::string_view, 6> kColors{"red", "blue", "black", "white", "green", "grey"};

}  // namespace

EnvConfig generate_shopsim(std::uint64_t seed, const ShopSimGenOptions& opts) {
  EnvConfig cfg;
  cfg.kind = EnvKind::ShopSim;
  cfg.max_steps = opts.max_steps;
  cfg.history_window = opts.history_window;
  Rng rng(derive_seed(seed, 0x73686f70));

  // Material/good pairings are split so OOD catalogs only offer unseen products.
  std::vector<std::string> id_names, ood_names;
  for (std::size_t m = 0; m < kMaterials.size(); ++m)
    for (std::size_t g = 0; g < kGoods.size(); ++g)
      ((m + g) % 3 == 0 ? ood_names : id_names).push_back(std::string(kMaterials[m]) + " " + std::string(kGoods[g]));

  for (Split split : {Split::ID, Split::OOD}) {
    const int n = split == Split::ID ? opts.id_catalogs : opts.ood_catalogs;
    for (int i = 0; i < n; ++i) {
      ShopCatalog c;
      c.id = id_with_index(split == Split::ID ? "shop-id-" : "shop-ood-", i);
      c.split = split;
      auto names = split == Split::ID ? id_names : ood_names;
      rng.shuffle(names);
      for (std::size_t p = 0; p < 6; ++p) {
        std::vector<std::string> colors(kColors.begin(), kColors.end());
        rng.shuffle(colors);
        colors.resize(2 + static_cast<std::size_t>(rng.below(2)));
        c.products.push_back({names[p], colors});
      }
      std::size_t combos = 0;
      for (const auto& p : c.products) combos += p.options.size();
      const std::size_t want = std::min(combos, static_cast<std::size_t>(std::max(opts.tasks_per_catalog, 0)));
      std::set<std::string> ids;
      while (ids.size() < want) {
        const Product& p = c.products[static_cast<std::size_t>(rng.below(c.products.size()))];
        const std::string& option = pick(rng, p.options);
        Task t;
        t.layout_id = c.id;
        t.split = split;
        t.family = TaskFamily::ShopPurchase;
        t.goal.object_class = p.name;
        t.goal.target = option;
        t.description = "i am looking for a " + p.name + " in " + option + ".";
        t.task_id = "buy-" + p.name + "-" + option + "-" + c.id;
        std::replace(t.task_id.begin(), t.task_id.end(), ' ', '-');
        if (ids.insert(t.task_id).second) cfg.tasks.push_back(std::move(t));
      }
      cfg.catalogs.push_back(std::make_shared<const ShopCatalog>(std::move(c)));
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace actforge::textenv

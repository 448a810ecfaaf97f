#include <algorithm>

#include "actforge/errors.hpp"
#include "actforge/text.hpp"
#include "textenv_internal.hpp"

namespace actforge::textenv::detail {
namespace {

enum class Verb { GoTo, Open, Close, Take, Put, Clean, Heat, Inventory, Look };

struct HouseAction {
  Verb verb;
  std::string object;
  std::string receptacle;
  std::string text;
};

std::string join_names(const std::vector<std::string>& names) {
  if (names.empty()) return "nothing";
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

std::vector<std::string> contents(const WorldState& s, const std::string& receptacle) {
  std::vector<std::string> out;
  const auto& h = s.house_state();
  for (const auto& obj : s.house->objects) {
    auto it = h.object_locations.find(obj.name);
    if (it != h.object_locations.end() && it->second == receptacle) out.push_back(obj.name);
  }
  return out;
}

bool is_open(const HouseState& h, const Receptacle& r) {
  if (!r.openable) return true;
  auto it = h.receptacle_open.find(r.name);
  return it != h.receptacle_open.end() && it->second;
}

const ObjectPlacement* find_object(const HouseLayout& layout, const std::string& name) {
  for (const auto& o : layout.objects)
    if (o.name == name) return &o;
  return nullptr;
}

const Receptacle* find_by_type(const HouseLayout& layout, std::string_view type) {
  for (const auto& r : layout.receptacles)
    if (r.type == type) return &r;
  return nullptr;
}

std::vector<HouseAction> enumerate(const WorldState& s) {
  const auto& layout = *s.house;
  const auto& h = s.house_state();
  std::vector<HouseAction> out;
  for (const auto& r : layout.receptacles) {
    if (r.name != h.agent_location) out.push_back({Verb::GoTo, "", r.name, "go to " + r.name});
  }
  if (const Receptacle* here = layout.find_receptacle(h.agent_location)) {
    const bool accessible = is_open(h, *here);
    if (here->openable) {
      if (accessible)
        out.push_back({Verb::Close, "", here->name, "close " + here->name});
      else
        out.push_back({Verb::Open, "", here->name, "open " + here->name});
    }
    if (!h.holding && accessible) {
      for (const auto& obj : contents(s, here->name))
        out.push_back({Verb::Take, obj, here->name, "take " + obj + " from " + here->name});
    }
    if (h.holding) {
      const std::string& obj = *h.holding;
      if (accessible)
        out.push_back({Verb::Put, obj, here->name, "put " + obj + " in/on " + here->name});
      if (here->type == "sinkbasin")
        out.push_back({Verb::Clean, obj, here->name, "clean " + obj + " with " + here->name});
      if (here->type == "microwave")
        out.push_back({Verb::Heat, obj, here->name, "heat " + obj + " with " + here->name});
    }
  }
  out.push_back({Verb::Inventory, "", "", "inventory"});
  out.push_back({Verb::Look, "", "", "look"});
  return out;
}

std::string describe_arrival(const WorldState& s, const Receptacle& r) {
  const auto& h = s.house_state();
  std::string obs = "You arrive at " + r.name + ". ";
  if (!is_open(h, r)) return obs + "The " + r.name + " is closed.";
  if (r.openable) return obs + "The " + r.name + " is open. In it, you see " + join_names(contents(s, r.name)) + ".";
  return obs + "On the " + r.name + ", you see " + join_names(contents(s, r.name)) + ".";
}

}  // namespace

HouseState house_initial_state(const HouseLayout& layout) {
  HouseState h;
  for (const auto& o : layout.objects) {
    h.object_locations[o.name] = o.receptacle;
    h.object_flags[o.name] = ObjectFlags{};
  }
  for (const auto& r : layout.receptacles)
    if (r.openable) h.receptacle_open[r.name] = false;
  return h;
}

std::vector<std::string> house_admissible(const WorldState& s) {
  std::vector<std::string> out;
  for (auto& a : enumerate(s)) out.push_back(std::move(a.text));
  return out;
}

Outcome house_apply(WorldState& s, const std::string& normalized_action) {
  const auto actions = enumerate(s);
  auto it = std::find_if(actions.begin(), actions.end(), [&](const HouseAction& a) {
    return text::normalize(a.text) == normalized_action;
  });
  if (it == actions.end()) return {false, std::string(kNothingHappens)};

  auto& h = std::get<HouseState>(s.detail);
  const auto& layout = *s.house;
  switch (it->verb) {
    case Verb::GoTo:
      h.agent_location = it->receptacle;
      return {true, describe_arrival(s, *layout.find_receptacle(it->receptacle))};
    case Verb::Open: {
      h.receptacle_open[it->receptacle] = true;
      return {true, "You open the " + it->receptacle + ". The " + it->receptacle +
                        " is open. In it, you see " + join_names(contents(s, it->receptacle)) + "."};
    }
    case Verb::Close:
      h.receptacle_open[it->receptacle] = false;
      return {true, "You close the " + it->receptacle + "."};
    case Verb::Take:
      h.object_locations.erase(it->object);
      h.holding = it->object;
      return {true, "You pick up the " + it->object + " from the " + it->receptacle + "."};
    case Verb::Put:
      h.object_locations[it->object] = it->receptacle;
      h.holding.reset();
      return {true, "You put the " + it->object + " in/on the " + it->receptacle + "."};
    case Verb::Clean:
      h.object_flags[it->object].clean = true;
      return {true, "You clean the " + it->object + " using the " + it->receptacle + "."};
    case Verb::Heat:
      h.object_flags[it->object].heated = true;
      return {true, "You heat the " + it->object + " using the " + it->receptacle + "."};
    case Verb::Inventory:
      if (h.holding) return {true, "You are carrying: " + *h.holding + "."};
      return {true, "You are not carrying anything."};
    case Verb::Look:
      if (h.agent_location == kRoomCenter) return {true, "You are in the middle of a room."};
      return {true, "You are at " + h.agent_location + "."};
  }
  return {false, std::string(kNothingHappens)};
}

namespace {

bool flags_ok(const Goal& g, const ObjectFlags& f) {
  return (!g.need_clean || f.clean) && (!g.need_hot || f.heated);
}

}  // namespace

bool house_goal_satisfied(const WorldState& s) {
  const auto& g = s.task.goal;
  const auto& h = s.house_state();
  for (const auto& obj : s.house->objects) {
    if (obj.object_class != g.object_class) continue;
    const auto& flags = h.object_flags.at(obj.name);
    if (!flags_ok(g, flags)) continue;
    if (g.target.empty()) {
      if (h.holding == obj.name) return true;
    } else {
      auto it = h.object_locations.find(obj.name);
      if (it != h.object_locations.end() && it->second == g.target) return true;
    }
  }
  return false;
}

std::string house_expert(const WorldState& s, const Task& task) {
  if (house_goal_satisfied(s)) throw PlanningError("goal already satisfied for " + task.task_id);
  const auto& layout = *s.house;
  const auto& h = s.house_state();
  const Goal& g = task.goal;

  const Receptacle* here = layout.find_receptacle(h.agent_location);
  auto goto_or = [&](const Receptacle& r, auto&& at_action) -> std::string {
    if (h.agent_location != r.name) return "go to " + r.name;
    if (!is_open(h, r)) return "open " + r.name;
    return at_action();
  };

  // Locate the goal object: the held one if it matches, else the first of
  // its class in layout order.
  std::string target_obj;
  if (h.holding) {
    const auto* held = find_object(layout, *h.holding);
    if (held && held->object_class == g.object_class) target_obj = held->name;
  }
  if (target_obj.empty()) {
    for (const auto& o : layout.objects) {
      if (o.object_class == g.object_class) {
        target_obj = o.name;
        break;
      }
    }
  }
  if (target_obj.empty()) throw PlanningError("no object of class '" + g.object_class + "' in layout " + layout.id);

  if (h.holding && *h.holding != target_obj) {
    // Hands are full with the wrong object: set it down where we stand.
    if (here && is_open(h, *here)) return "put " + *h.holding + " in/on " + here->name;
    if (here) return "open " + here->name;
    return "go to " + layout.receptacles.front().name;
  }

  if (!h.holding) {
    const Receptacle* loc = layout.find_receptacle(h.object_locations.at(target_obj));
    if (!loc) throw PlanningError("object " + target_obj + " has no receptacle");
    return goto_or(*loc, [&] { return "take " + target_obj + " from " + loc->name; });
  }

  const ObjectFlags& flags = h.object_flags.at(target_obj);
  if (g.need_clean && !flags.clean) {
    const Receptacle* sink = find_by_type(layout, "sinkbasin");
    if (!sink) throw PlanningError("clean goal but no sinkbasin in layout " + layout.id);
    if (h.agent_location != sink->name) return "go to " + sink->name;
    return "clean " + target_obj + " with " + sink->name;
  }
  if (g.need_hot && !flags.heated) {
    const Receptacle* mw = find_by_type(layout, "microwave");
    if (!mw) throw PlanningError("heat goal but no microwave in layout " + layout.id);
    if (h.agent_location != mw->name) return "go to " + mw->name;
    return "heat " + target_obj + " with " + mw->name;
  }
  if (g.target.empty()) throw PlanningError("hold goal cannot progress for " + task.task_id);
  const Receptacle* dest = layout.find_receptacle(g.target);
  if (!dest) throw PlanningError("target receptacle '" + g.target + "' not in layout " + layout.id);
  return goto_or(*dest, [&] { return "put " + target_obj + " in/on " + dest->name; });
}

std::string house_initial_observation(const WorldState& s) {
  std::vector<std::string> names;
  for (const auto& r : s.house->receptacles) names.push_back(r.name);
  return "You are in the middle of a room. Looking quickly around you, you see " + join_names(names) + ".";
}

}  // namespace actforge::textenv::detail

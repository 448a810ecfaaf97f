#pragma once

#include <string>
#include <vector>

#include "actforge/textenv.hpp"

namespace actforge::textenv::detail {

struct Outcome {
  bool applied = false;  // false => "Nothing happens."
  std::string observation;
};

// GridHouse
HouseState house_initial_state(const HouseLayout& layout);
std::vector<std::string> house_admissible(const WorldState& s);
Outcome house_apply(WorldState& s, const std::string& normalized_action);
bool house_goal_satisfied(const WorldState& s);
std::string house_expert(const WorldState& s, const Task& task);
std::string house_initial_observation(const WorldState& s);

// ShopSim
std::vector<std::string> shop_admissible(const WorldState& s);
Outcome shop_apply(WorldState& s, const std::string& normalized_action);
bool shop_goal_satisfied(const WorldState& s);
bool shop_terminal(const WorldState& s);
std::string shop_expert(const WorldState& s, const Task& task);
std::string shop_initial_observation(const WorldState& s);
std::vector<std::string> shop_search(const ShopCatalog& catalog, const std::string& query);

}  // namespace actforge::textenv::detail

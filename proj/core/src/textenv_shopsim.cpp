#include <algorithm>

#include "actforge/errors.hpp"
#include "actforge/text.hpp"
#include "textenv_internal.hpp"

namespace actforge::textenv::detail {
namespace {

constexpr std::size_t kMaxResults = 3;
const std::string kBack = "click[back to search]";
const std::string kBuy = "click[buy now]";

std::string click(const std::string& label) { return "click[" + label + "]"; }

std::string bracket_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) {
    if (!out.empty()) out += ' ';
    out += "[" + i + "]";
  }
  return out;
}

}  // namespace

std::vector<std::string> shop_search(const ShopCatalog& catalog, const std::string& query) {
  const auto q = text::tokenize(text::normalize(query));
  std::vector<std::pair<int, std::size_t>> scored;
  for (std::size_t i = 0; i < catalog.products.size(); ++i) {
    int score = 0;
    for (const auto& t : text::tokenize(catalog.products[i].name))
      if (std::find(q.begin(), q.end(), t) != q.end()) ++score;
    if (score > 0) scored.emplace_back(score, i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < kMaxResults; ++i)
    out.push_back(catalog.products[scored[i].second].name);
  return out;
}

std::vector<std::string> shop_admissible(const WorldState& s) {
  const auto& st = s.shop_state();
  std::vector<std::string> out;
  switch (st.page) {
    case ShopPage::Search:
      for (const auto& p : s.shop->products) out.push_back("search[" + p.name + "]");
      break;
    case ShopPage::Results:
      for (const auto& r : st.results) out.push_back(click(r));
      out.push_back(kBack);
      break;
    case ShopPage::Item:
      if (const Product* p = s.shop->find_product(st.item))
        for (const auto& o : p->options) out.push_back(click(o));
      out.push_back(kBuy);
      out.push_back(kBack);
      break;
    case ShopPage::Done:
      break;
  }
  return out;
}

Outcome shop_apply(WorldState& s, const std::string& a) {
  auto& st = std::get<ShopState>(s.detail);
  if (st.page == ShopPage::Done) return {false, std::string(kNothingHappens)};

  // Open-vocabulary search: any bracketed query is accepted on the search page.
  if (st.page == ShopPage::Search && text::starts_with(a, "search[") && a.size() > 8 && a.back() == ']') {
    st.query = a.substr(7, a.size() - 8);
    st.results = shop_search(*s.shop, st.query);
    st.page = ShopPage::Results;
    if (st.results.empty()) return {true, "No results for [" + st.query + "]."};
    return {true, "Search results for [" + st.query + "]: " + bracket_list(st.results) + "."};
  }

  const auto admissible = shop_admissible(s);
  auto it = std::find_if(admissible.begin(), admissible.end(),
                         [&](const std::string& x) { return text::normalize(x) == a; });
  if (it == admissible.end()) return {false, std::string(kNothingHappens)};
  const std::string chosen = *it;

  if (chosen == kBack) {
    st = ShopState{};
    return {true, "You are on the search page."};
  }
  if (chosen == kBuy) {
    st.purchased = true;
    st.page = ShopPage::Done;
    return {true, "You bought " + st.item + " (" + (st.option.empty() ? "no option" : st.option) + ")."};
  }
  const std::string label = chosen.substr(6, chosen.size() - 7);
  if (st.page == ShopPage::Results) {
    st.item = label;
    st.option.clear();
    st.page = ShopPage::Item;
    const Product* p = s.shop->find_product(label);
    return {true, "You are viewing " + label + ". Options: " + bracket_list(p ? p->options : std::vector<std::string>{}) + "."};
  }
  // Item page option click.
  st.option = label;
  return {true, "You selected " + label + " for " + st.item + "."};
}

bool shop_goal_satisfied(const WorldState& s) {
  const auto& st = s.shop_state();
  return st.purchased && st.item == s.task.goal.object_class && st.option == s.task.goal.target;
}

bool shop_terminal(const WorldState& s) { return s.shop_state().purchased; }

std::string shop_expert(const WorldState& s, const Task& task) {
  if (shop_goal_satisfied(s)) throw PlanningError("goal already satisfied for " + task.task_id);
  const auto& st = s.shop_state();
  const Goal& g = task.goal;
  const Product* want = s.shop->find_product(g.object_class);
  if (!want) throw PlanningError("product '" + g.object_class + "' not in catalog " + s.shop->id);
  if (std::find(want->options.begin(), want->options.end(), g.target) == want->options.end())
    throw PlanningError("product '" + g.object_class + "' has no option '" + g.target + "'");
  switch (st.page) {
    case ShopPage::Search:
      return "search[" + g.object_class + "]";
    case ShopPage::Results:
      if (std::find(st.results.begin(), st.results.end(), g.object_class) != st.results.end())
        return click(g.object_class);
      return kBack;
    case ShopPage::Item:
      if (st.item != g.object_class) return kBack;
      if (st.option != g.target) return click(g.target);
      return kBuy;
    case ShopPage::Done:
      break;
  }
  throw PlanningError("wrong item already purchased for " + task.task_id);
}

std::string shop_initial_observation(const WorldState&) { return "You are on the search page."; }

}  // namespace actforge::textenv::detail

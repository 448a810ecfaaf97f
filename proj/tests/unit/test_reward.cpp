#include <gtest/gtest.h>

#include "actforge/errors.hpp"
#include "actforge/policy.hpp"
#include "actforge/reward.hpp"
#include "actforge/rng.hpp"
#include "reward_cases.hpp"

using namespace actforge;

namespace {

policy::Response tagged(std::string s) { return {std::move(s), true, policy::ResponseKind::OtherAdmissible}; }
policy::Response malformed() { return {"", false, policy::ResponseKind::Malformed}; }

}  // namespace

TEST(Reward, FixtureTable) {
  const auto cases = checks::reward_cases();
  ASSERT_EQ(cases.size(), 50u);
  for (const auto& c : cases) {
    const auto r = reward::score_action(c.action, c.expert, c.admissible, c.adm_enabled);
    EXPECT_EQ(r.total, c.total) << c.action.value_or("<untagged>") << " vs " << c.expert;
    reward::check_invariants(r);
  }
}

TEST(Reward, Components) {
  const std::vector<std::string> adm{"go to shelf 1", "look"};
  EXPECT_EQ(reward::score(tagged("go to shelf 1"), "go to shelf 1", adm, true),
            (reward::RewardBreakdown{1.0, 0.0, 0.0, 1.0}));
  EXPECT_EQ(reward::score(tagged("look"), "go to shelf 1", adm, true), (reward::RewardBreakdown{0.0, 0.1, 0.0, 0.1}));
  EXPECT_EQ(reward::score(malformed(), "go to shelf 1", adm, true), (reward::RewardBreakdown{0.0, 0.0, -0.5, -0.5}));
  EXPECT_EQ(reward::score(tagged("jump"), "go to shelf 1", adm, true), (reward::RewardBreakdown{}));
  EXPECT_EQ(reward::score(tagged("look"), "go to shelf 1", adm, false), (reward::RewardBreakdown{}));
}

TEST(Reward, Extract) {
  EXPECT_EQ(reward::extract(tagged("look")), std::optional<std::string>("look"));
  EXPECT_FALSE(reward::extract(malformed()));
}

TEST(Reward, EmptyExpertRejected) {
  EXPECT_THROW(reward::score(tagged("look"), "", {}, true), PreconditionError);
}

TEST(Reward, InvariantCheckerRejectsBadBreakdowns) {
  EXPECT_THROW(reward::check_invariants({1.0, 0.1, 0.0, 1.1}), PreconditionError);
  EXPECT_THROW(reward::check_invariants({0.0, 0.1, -0.5, -0.4}), PreconditionError);
  EXPECT_THROW(reward::check_invariants({0.0, 0.0, 0.0, 0.5}), PreconditionError);
  EXPECT_THROW(reward::check_invariants({0.5, 0.0, 0.0, 0.5}), PreconditionError);
}

TEST(Reward, RandomizedInvariantsAndNormalizationInvariance) {
  const std::vector<std::string> pool{"look", "go to shelf 1", "go to cabinet 1", "open drawer 1", "inventory",
                                      "take mug 1 from shelf 1", "search[red mug]", "click[buy now]"};
  Rng rng(99);
  auto perturb = [&](const std::string& s) {
    std::string out = rng.coin() ? "  " : "";
    for (char c : s) {
      out += (rng.coin() && c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
      if (c == ' ' && rng.coin()) out += "\t ";
    }
    return out;
  };
  for (int i = 0; i < 100000; ++i) {
    const std::string expert = pool[rng.below(pool.size())];
    std::vector<std::string> adm;
    for (const auto& p : pool)
      if (rng.coin()) adm.push_back(p);
    const bool adm_enabled = rng.coin();
    std::optional<std::string> action;
    if (rng.below(5) != 0) action = pool[rng.below(pool.size())];
    const auto r = reward::score_action(action, expert, adm, adm_enabled);
    reward::check_invariants(r);
    ASSERT_TRUE(r.total == 1.0 || r.total == 0.1 || r.total == 0.0 || r.total == -0.5);
    if (i % 10 == 0) {
      std::optional<std::string> pa = action ? std::optional<std::string>(perturb(*action)) : std::nullopt;
      ASSERT_EQ(reward::score_action(pa, perturb(expert), adm, adm_enabled), r);
    }
  }
}

TEST(Reward, ExpertStrictlyHighest) {
  const std::vector<std::string> adm{"go to shelf 1", "look", "inventory"};
  const double best = reward::score(tagged("look"), "look", adm, true).total;
  for (const auto& a : adm)
    if (a != "look") EXPECT_LT(reward::score(tagged(a), "look", adm, true).total, best);
  EXPECT_LT(reward::score(malformed(), "look", adm, true).total, best);
}

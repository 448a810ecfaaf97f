#pragma once

// Composite verifiable reward: exact-match accuracy, admissibility partial
// credit, and the missing-tag format penalty.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "actforge/text.hpp"

namespace actforge::policy {
struct Response;
}

namespace actforge::reward {

inline constexpr double kAccuracyReward = 1.0;
inline constexpr double kAdmissibleReward = 0.1;
inline constexpr double kFormatPenalty = -0.5;

using text::normalize;

struct RewardBreakdown {
  double r_acc = 0.0;
  double r_adm = 0.0;
  double r_fmt = 0.0;
  double total = 0.0;

  bool operator==(const RewardBreakdown&) const = default;
};

/// Action text inside the response's action tags, or nullopt when the
/// response has none.
std::optional<std::string> extract(const policy::Response& response);

/// Scores an already-extracted action (nullopt = untagged response).
RewardBreakdown score_action(const std::optional<std::string>& action, std::string_view expert_action,
                             const std::vector<std::string>& admissible, bool adm_enabled);

RewardBreakdown score(const policy::Response& response, std::string_view expert_action,
                      const std::vector<std::string>& admissible, bool adm_enabled);

/// Checks exclusivity and the value-set invariants; throws PreconditionError.
void check_invariants(const RewardBreakdown& r);

}  // namespace actforge::reward

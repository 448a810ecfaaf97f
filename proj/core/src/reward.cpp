#include "actforge/reward.hpp"

#include <algorithm>

#include "actforge/errors.hpp"
#include "actforge/policy.hpp"

namespace actforge::reward {

std::optional<std::string> extract(const policy::Response& response) {
  if (!response.tagged) return std::nullopt;
  return response.action_text;
}

RewardBreakdown score_action(const std::optional<std::string>& action, std::string_view expert_action,
                             const std::vector<std::string>& admissible, bool adm_enabled) {
  if (expert_action.empty()) throw PreconditionError("expert action must be non-empty");
  RewardBreakdown r;
  if (!action) {
    r.r_fmt = kFormatPenalty;
  } else {
    const std::string a = normalize(*action);
    if (a == normalize(expert_action)) {
      r.r_acc = kAccuracyReward;
    } else if (adm_enabled && std::any_of(admissible.begin(), admissible.end(),
                                          [&](const std::string& x) { return normalize(x) == a; })) {
      r.r_adm = kAdmissibleReward;
    }
  }
  r.total = r.r_acc + r.r_adm + r.r_fmt;
  return r;
}

RewardBreakdown score(const policy::Response& response, std::string_view expert_action,
                      const std::vector<std::string>& admissible, bool adm_enabled) {
  return score_action(extract(response), expert_action, admissible, adm_enabled);
}

void check_invariants(const RewardBreakdown& r) {
  auto fail = [](const char* what) { throw PreconditionError(std::string("reward invariant: ") + what); };
  if (r.total != r.r_acc + r.r_adm + r.r_fmt) fail("total != sum of components");
  if (r.r_acc != 0.0 && r.r_acc != kAccuracyReward) fail("r_acc value");
  if (r.r_adm != 0.0 && r.r_adm != kAdmissibleReward) fail("r_adm value");
  if (r.r_fmt != 0.0 && r.r_fmt != kFormatPenalty) fail("r_fmt value");
  if (r.r_acc > 0 && (r.r_adm != 0.0 || r.r_fmt != 0.0)) fail("accuracy not exclusive");
  if (r.r_fmt < 0 && (r.r_acc != 0.0 || r.r_adm != 0.0)) fail("format penalty not exclusive");
}

}  // namespace actforge::reward

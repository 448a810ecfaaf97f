#include "actforge/policy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string_view>

#include "actforge/errors.hpp"
#include "actforge/hashing.hpp"
#include "actforge/rng.hpp"
#include "actforge/text.hpp"

namespace actforge::policy {

PolicyParams::PolicyParams(std::size_t dim, std::uint64_t seed) : weights_(dim, 0.0), seed_(seed) {
  if (dim == 0) throw ConfigError("policy dimension must be positive");
}

PolicyParams::PolicyParams(std::vector<double> weights, std::uint64_t version_tag, std::uint64_t seed)
    : weights_(std::move(weights)), version_tag_(version_tag), seed_(seed) {
  if (weights_.empty()) throw ConfigError("policy dimension must be positive");
}

PolicyParams PolicyParams::updated(std::vector<double> weights) const {
  if (weights.size() != weights_.size()) throw PreconditionError("dimension change in parameter update");
  return PolicyParams(std::move(weights), version_tag_ + 1, seed_);
}

void PolicyParams::check_finite() const {
  for (std::size_t i = 0; i < weights_.size(); ++i)
    if (!std::isfinite(weights_[i])) throw NumericError("non-finite weight at index " + std::to_string(i));
}

PromptSpec PromptSpec::action(textenv::Context ctx) {
  PromptSpec p;
  p.context = std::move(ctx);
  return p;
}

PromptSpec PromptSpec::critic(textenv::Context ctx, std::string a_plus, std::string a_minus, int permutation_bit) {
  PromptSpec p;
  p.context = std::move(ctx);
  p.mode = PromptMode::Critic;
  p.candidates = std::make_pair(std::move(a_plus), std::move(a_minus));
  p.permutation_bit = permutation_bit ? 1 : 0;
  return p;
}

std::pair<std::string, std::string> PromptSpec::displayed_candidates() const {
  if (!candidates) throw PreconditionError("prompt has no candidates");
  if (permutation_bit) return {candidates->second, candidates->first};
  return *candidates;
}

double SparseVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (const auto& [i, v] : entries) s += dense[i] * v;
  return s;
}

std::vector<Response> response_set(const PromptSpec& prompt) {
  const auto& admissible = prompt.context.admissible_actions;
  std::vector<Response> out;
  if (prompt.mode == PromptMode::Action) {
    if (admissible.empty()) throw PreconditionError("ACTION prompt with no admissible actions");
    for (const auto& a : admissible) out.push_back({a, true, ResponseKind::OtherAdmissible});
  } else {
    if (!prompt.candidates) throw PreconditionError("CRITIC prompt without candidates");
    const std::string c1 = text::normalize(prompt.candidates->first);
    const std::string c2 = text::normalize(prompt.candidates->second);
    if (c1 == c2) throw PreconditionError("CRITIC candidates are equal after normalization: '" + c1 + "'");
    bool seen1 = false, seen2 = false;
    for (const auto& a : admissible) {
      const std::string n = text::normalize(a);
      const bool is1 = n == c1, is2 = n == c2;
      seen1 |= is1;
      seen2 |= is2;
      out.push_back({a, true, (is1 || is2) ? ResponseKind::Candidate : ResponseKind::OtherAdmissible});
    }
    // Candidates outside the listed admissible set still get a response.
    if (!seen1) out.push_back({prompt.candidates->first, true, ResponseKind::Candidate});
    if (!seen2) out.push_back({prompt.candidates->second, true, ResponseKind::Candidate});
  }
  out.push_back({"", false, ResponseKind::Malformed});
  return out;
}

namespace {

bool is_stopword(std::string_view t) {
  static const std::set<std::string_view> kStop{"a",    "an",   "the",  "you",   "at",     "of",   "is",
                                                "it",   "to",   "see",  "and",   "are",    "in",   "on",
                                                "i",    "am",   "for",  "your",  "looking", "quickly", "around",
                                                "some", "this", "that", "there", "with"};
  return kStop.count(t) > 0;
}

bool is_number(std::string_view t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::vector<std::string> content_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : text::tokenize(text::normalize(s)))
    if (!is_stopword(t)) out.push_back(std::move(t));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Coarse situation flags read off the admissible list.
std::vector<std::string> situation_flags(const textenv::Context& ctx) {
  bool holding = false, can_take = false, closed_here = false, can_put = false;
  for (const auto& a : ctx.admissible_actions) {
    const std::string n = text::normalize(a);
    if (text::starts_with(n, "put ") || text::starts_with(n, "clean ") || text::starts_with(n, "heat "))
      holding = true;
    if (text::starts_with(n, "put ")) can_put = true;
    if (text::starts_with(n, "take ")) can_take = true;
    if (text::starts_with(n, "open ")) closed_here = true;
  }
  std::vector<std::string> out;
  out.push_back(holding ? "holding" : "empty-handed");
  if (can_take) out.push_back("can-take");
  if (closed_here) out.push_back("closed-here");
  if (can_put) out.push_back("can-put");
  if (ctx.history.empty()) out.push_back("first-step");
  return out;
}

}  // namespace

std::vector<std::string> feature_keys(const PromptSpec& prompt, const Response& response) {
  std::vector<std::string> keys;
  const bool critic = prompt.mode == PromptMode::Critic;
  if (!response.tagged) {
    keys.emplace_back("malformed");
    if (critic) keys.emplace_back("malformed|critic");
    return keys;
  }
  const auto& ctx = prompt.context;
  const std::string action = text::normalize(response.action_text);
  std::vector<std::string> resp = text::tokenize(action);
  std::sort(resp.begin(), resp.end());
  resp.erase(std::unique(resp.begin(), resp.end()), resp.end());

  std::vector<std::string> last{"<none>"};
  std::string last_verb = "<none>";
  if (!ctx.history.empty()) {
    last = text::tokenize(text::normalize(ctx.history.back().action));
    if (last.empty()) last = {"<empty>"};
    last_verb = last.front();
  }
  const auto goal = content_tokens(ctx.task_description);
  const auto obs = content_tokens(ctx.current_observation);
  const auto flags = situation_flags(ctx);

  for (const auto& t : resp) keys.push_back("u|" + t);
  for (const auto& l : last)
    for (const auto& t : resp) keys.push_back("la|" + l + "|" + t);
  for (const auto& g : goal)
    for (const auto& t : resp) {
      keys.push_back("g|" + g + "|" + t);
      keys.push_back("glv|" + g + "|" + last_verb + "|" + t);
    }
  for (const auto& o : obs)
    for (const auto& t : resp) keys.push_back("o|" + o + "|" + t);
  for (const auto& f : flags)
    for (const auto& t : resp) keys.push_back("s|" + f + "|" + t);

  // Delexicalized relations between the response and the context, keyed by
  // the response verb so they transfer to unseen object/receptacle names.
  const std::string verb = resp.empty() ? "<empty>" : text::tokenize(action).front();
  int goal_overlap = 0;
  for (const auto& t : content_tokens(action))
    if (!is_number(t) && std::binary_search(goal.begin(), goal.end(), t)) ++goal_overlap;
  keys.push_back("x|goal" + std::to_string(std::min(goal_overlap, 2)) + "|" + verb);
  const bool goal_visible = std::any_of(goal.begin(), goal.end(), [&](const std::string& g) {
    return !is_number(g) && std::binary_search(obs.begin(), obs.end(), g) && g != "clean" && g != "hot";
  });
  keys.push_back(std::string(goal_visible ? "x|goal-visible|" : "x|goal-hidden|") + verb);
  bool in_history = false;
  for (const auto& h : ctx.history)
    if (text::normalize(h.action) == action) in_history = true;
  if (in_history) keys.push_back("x|in-history|" + verb);
  if (!ctx.history.empty() && text::normalize(ctx.history.back().action) == action)
    keys.push_back("x|repeat-last|" + verb);

  if (critic) {
    const auto [first, second] = prompt.displayed_candidates();
    if (action == text::normalize(first)) keys.emplace_back("c|cand1");
    if (action == text::normalize(second)) keys.emplace_back("c|cand2");
    bool in_history = false;
    for (const auto& h : ctx.history)
      if (text::normalize(h.action) == action) in_history = true;
    if (in_history) keys.emplace_back("c|in-history");
    if (!ctx.history.empty() && text::normalize(ctx.history.back().action) == action &&
        ctx.current_observation == textenv::kNothingHappens)
      keys.emplace_back("c|repeats-failed");
  }
  return keys;
}

SparseVector featurize(const PromptSpec& prompt, const Response& response, std::size_t dim) {
  if (dim == 0) throw ConfigError("feature dimension must be positive");
  SparseVector v;
  for (const auto& key : feature_keys(prompt, response))
    v.entries.emplace_back(static_cast<std::uint32_t>(fnv1a64(key) % dim), 1.0);
  std::sort(v.entries.begin(), v.entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Merge collisions by summing.
  std::vector<std::pair<std::uint32_t, double>> merged;
  for (const auto& e : v.entries) {
    if (!merged.empty() && merged.back().first == e.first)
      merged.back().second += e.second;
    else
      merged.push_back(e);
  }
  v.entries = std::move(merged);
  return v;
}

std::optional<std::size_t> EncodedPrompt::find(std::string_view action) const {
  const std::string n = text::normalize(action);
  for (std::size_t i = 0; i < responses.size(); ++i)
    if (responses[i].tagged && text::normalize(responses[i].action_text) == n) return i;
  return std::nullopt;
}

EncodedPrompt encode(const PromptSpec& prompt, std::size_t dim) {
  EncodedPrompt e;
  e.dim = dim;
  e.responses = response_set(prompt);
  e.features.reserve(e.responses.size());
  for (const auto& r : e.responses) e.features.push_back(featurize(prompt, r, dim));
  return e;
}

namespace {

void check_prompt(const PolicyParams& params, const EncodedPrompt& prompt, double temperature) {
  if (!(temperature > 0.0)) throw PreconditionError("temperature must be positive");
  if (prompt.dim != params.dim()) throw PreconditionError("prompt encoded for a different dimension");
  if (prompt.responses.empty()) throw PreconditionError("empty response set");
}

}  // namespace

std::vector<double> logits(const PolicyParams& params, const EncodedPrompt& prompt, double temperature) {
  check_prompt(params, prompt, temperature);
  std::vector<double> z(prompt.size());
  const auto w = params.weights();
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = prompt.features[i].dot(w) / temperature;
    if (!std::isfinite(z[i])) throw NumericError("non-finite logit for response " + std::to_string(i));
  }
  return z;
}

std::vector<double> log_probabilities(const PolicyParams& params, const EncodedPrompt& prompt, double temperature) {
  auto z = logits(params, prompt, temperature);
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  for (double& v : z) v -= lse;
  return z;
}

std::vector<double> probabilities(const PolicyParams& params, const EncodedPrompt& prompt, double temperature) {
  auto z = logits(params, prompt, temperature);
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : z) v /= s;
  return z;
}

std::vector<double> probabilities(const PolicyParams& params, const PromptSpec& prompt, double temperature) {
  return probabilities(params, encode(prompt, params.dim()), temperature);
}

std::size_t greedy_index(const PolicyParams& params, const EncodedPrompt& prompt) {
  const auto z = logits(params, prompt, 1.0);
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::vector<Sample> sample_group(const PolicyParams& params, const EncodedPrompt& prompt, int group_size,
                                 double temperature, std::uint64_t seed) {
  if (group_size < 2) throw ConfigError("group size must be >= 2, got " + std::to_string(group_size));
  const auto p = probabilities(params, prompt, temperature);
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(group_size));
  for (int g = 0; g < group_size; ++g) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t idx = p.size() - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      cum += p[i];
      if (u < cum) {
        idx = i;
        break;
      }
    }
    out.push_back({idx, prompt.responses[idx], std::log(p[idx])});
  }
  return out;
}

void add_weighted_features(const EncodedPrompt& prompt, std::span<const double> coeff, double scale,
                           std::span<double> grad) {
  for (std::size_t j = 0; j < prompt.size(); ++j) {
    const double c = coeff[j] * scale;
    if (c == 0.0) continue;
    for (const auto& [i, v] : prompt.features[j].entries) grad[i] += c * v;
  }
}

std::vector<double> logprob_grad(const PolicyParams& params, const EncodedPrompt& prompt, std::size_t response_index,
                                 double temperature) {
  if (response_index >= prompt.size()) throw PreconditionError("response index out of range");
  auto coeff = probabilities(params, prompt, temperature);
  for (double& c : coeff) c = -c;
  coeff[response_index] += 1.0;
  std::vector<double> grad(params.dim(), 0.0);
  add_weighted_features(prompt, coeff, 1.0 / temperature, grad);
  return grad;
}

}  // namespace actforge::policy

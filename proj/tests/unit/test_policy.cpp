#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "actforge/errors.hpp"
#include "actforge/hashing.hpp"
#include "actforge/policy.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace actforge;
using namespace actforge::policy;

namespace {

EncodedPrompt two_way() {
  EncodedPrompt p;
  p.dim = 2;
  p.responses = {{"a", true, ResponseKind::OtherAdmissible}, {"b", true, ResponseKind::OtherAdmissible}};
  p.features = {SparseVector{{{0, 1.0}}}, SparseVector{{{1, 1.0}}}};
  return p;
}

textenv::Context five_action_context() {
  textenv::Context c;
  c.task_description = "put a clean cloth in/on shelf 1.";
  c.current_observation = "You arrive at shelf 1. On the shelf 1, you see cloth 1.";
  c.history = {{"You are in the middle of a room.", "look"}};
  c.admissible_actions = {"go to shelf 1", "look", "inventory", "take cloth 1 from shelf 1", "go to sinkbasin 1"};
  return c;
}

const textenv::ExpertDataset& gridhouse_demos() {
  static const auto ds = [] {
    textenv::GridHouseGenOptions o;
    o.id_layouts = 24;
    return textenv::generate_demonstrations(textenv::generate_gridhouse(0, o), 100, 1);
  }();
  return ds;
}

}  // namespace

TEST(ResponseSet, ActionMode) {
  const auto r = response_set(PromptSpec::action(five_action_context()));
  ASSERT_EQ(r.size(), 6u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_TRUE(r[i].tagged);
  EXPECT_FALSE(r[5].tagged);
  EXPECT_EQ(r[5].kind, ResponseKind::Malformed);
}

TEST(ResponseSet, CriticMode) {
  const auto spec = PromptSpec::critic(five_action_context(), "go to shelf 1", "look", 0);
  const auto r = response_set(spec);
  ASSERT_EQ(r.size(), 6u);
  int candidates = 0;
  for (const auto& x : r) candidates += x.kind == ResponseKind::Candidate;
  EXPECT_EQ(candidates, 2);
  EXPECT_THROW(response_set(PromptSpec::critic(five_action_context(), "look", " LOOK", 0)), PreconditionError);
}

TEST(ResponseSet, EmptyAdmissibleRejected) {
  textenv::Context c;
  EXPECT_THROW(response_set(PromptSpec::action(c)), PreconditionError);
}

TEST(ResponseSet, MalformedIffUntagged) {
  for (const auto& r : response_set(PromptSpec::critic(five_action_context(), "look", "jump", 1)))
    EXPECT_EQ(r.kind == ResponseKind::Malformed, !r.tagged);
}

TEST(Featurize, DeterministicAndMalformedIndicator) {
  const auto spec = PromptSpec::action(five_action_context());
  const auto r = response_set(spec);
  EXPECT_EQ(featurize(spec, r[0], kDefaultDim), featurize(spec, r[0], kDefaultDim));
  const auto keys = feature_keys(spec, r.back());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "malformed"), keys.end());
  const auto v = featurize(spec, r.back(), kDefaultDim);
  const auto idx = static_cast<std::uint32_t>(fnv1a64("malformed") % kDefaultDim);
  EXPECT_TRUE(std::any_of(v.entries.begin(), v.entries.end(), [&](const auto& e) { return e.first == idx; }));
}

TEST(Featurize, ListedConjunctions) {
  const auto spec = PromptSpec::action(five_action_context());
  const auto keys = feature_keys(spec, {"take cloth 1 from shelf 1", true, ResponseKind::OtherAdmissible});
  auto has = [&](const std::string& k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };
  EXPECT_TRUE(has("u|take"));
  EXPECT_TRUE(has("la|look|cloth"));
  EXPECT_TRUE(has("g|cloth|take"));
}

TEST(Featurize, CollisionsMergeBySumming) {
  const auto spec = PromptSpec::action(five_action_context());
  const Response r{"take cloth 1 from shelf 1", true, ResponseKind::OtherAdmissible};
  const auto keys = feature_keys(spec, r);
  const auto v = featurize(spec, r, 7);
  double total = 0.0;
  for (std::size_t i = 0; i < v.entries.size(); ++i) {
    total += v.entries[i].second;
    if (i) EXPECT_LT(v.entries[i - 1].first, v.entries[i].first);
  }
  EXPECT_EQ(total, static_cast<double>(keys.size()));
}

TEST(Featurize, PermutationSwapsCandidatePositions) {
  const auto ctx = five_action_context();
  const auto p0 = PromptSpec::critic(ctx, "go to shelf 1", "look", 0);
  const auto p1 = PromptSpec::critic(ctx, "go to shelf 1", "look", 1);
  const auto r0 = response_set(p0), r1 = response_set(p1);
  ASSERT_EQ(r0, r1);
  for (const auto& r : r0) {
    auto k0 = feature_keys(p0, r), k1 = feature_keys(p1, r);
    for (auto& k : k1) {
      if (k == "c|cand1") k = "c|cand2";
      else if (k == "c|cand2") k = "c|cand1";
    }
    std::sort(k0.begin(), k0.end());
    std::sort(k1.begin(), k1.end());
    EXPECT_EQ(k0, k1) << r.action_text;
  }
  const auto k = feature_keys(p1, {"go to shelf 1", true, ResponseKind::Candidate});
  EXPECT_NE(std::find(k.begin(), k.end(), "c|cand2"), k.end());
}

TEST(Featurize, CollisionRateOnGridHouse) {
  const auto& ds = gridhouse_demos();
  std::size_t pairs = 0, identical = 0;
  for (const auto& rec : ds.records) {
    const auto prompt = encode(PromptSpec::action(rec.context), kDefaultDim);
    for (std::size_t i = 0; i < prompt.size(); ++i)
      for (std::size_t j = i + 1; j < prompt.size(); ++j) {
        ++pairs;
        identical += prompt.features[i] == prompt.features[j];
      }
  }
  ASSERT_GT(pairs, 1000u);
  EXPECT_LT(static_cast<double>(identical) / static_cast<double>(pairs), 0.01);
}

TEST(Probabilities, ArithmeticOracle) {
  const auto prompt = two_way();
  const PolicyParams p(std::vector<double>{std::log(3.0), 0.0}, 0, 0);
  const auto pi = probabilities(p, prompt, 1.0);
  EXPECT_NEAR(pi[0], 0.75, 1e-15);
  EXPECT_NEAR(pi[1], 0.25, 1e-15);
  const auto lp = log_probabilities(p, prompt, 1.0);
  EXPECT_NEAR(lp[0], std::log(0.75), 1e-15);
}

TEST(Probabilities, ZeroThetaUniformAndNormalized) {
  const PolicyParams p(kDefaultDim, 0);
  const auto pi = probabilities(p, PromptSpec::action(five_action_context()), 1.0);
  for (double x : pi) EXPECT_DOUBLE_EQ(x, 1.0 / 6.0);
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto prompt = checks::random_prompt(rng, 2 + rng.below(8), 16);
    const auto q = checks::random_params(rng, 16, 5.0);
    const auto pr = probabilities(q, prompt, 0.5 + rng.uniform());
    double s = 0.0;
    for (double x : pr) {
      EXPECT_GT(x, 0.0);
      EXPECT_LT(x, 1.0);
      s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Probabilities, HighTemperatureFlattens) {
  const PolicyParams p(std::vector<double>{5.0, -5.0}, 0, 0);
  const auto pi = probabilities(p, two_way(), 1e6);
  EXPECT_LT(std::abs(pi[0] - pi[1]), 1e-5);
  EXPECT_THROW(probabilities(p, two_way(), 0.0), PreconditionError);
}

TEST(Probabilities, NonFiniteLogitsRejected) {
  const PolicyParams p(std::vector<double>{INFINITY, 0.0}, 0, 0);
  EXPECT_THROW(probabilities(p, two_way(), 1.0), NumericError);
}

TEST(Sampling, DeterministicAndStoresLogProbabilities) {
  const PolicyParams p(kDefaultDim, 0);
  const auto prompt = encode(PromptSpec::action(five_action_context()), kDefaultDim);
  const auto a = sample_group(p, prompt, 8, 1.0, 1);
  const auto b = sample_group(p, prompt, 8, 1.0, 1);
  ASSERT_EQ(a.size(), 8u);
  const auto pi = probabilities(p, prompt, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].index, b[i].index);
    EXPECT_EQ(a[i].logprob, std::log(pi[a[i].index]));
  }
}

TEST(Sampling, FrequencyMatchesDistribution) {
  const PolicyParams p(std::vector<double>{std::log(3.0), 0.0}, 0, 0);
  const auto s = sample_group(p, two_way(), 10000, 1.0, 11);
  double first = 0;
  for (const auto& x : s) first += x.index == 0;
  EXPECT_NEAR(first / 10000.0, 0.75, 0.02);
}

TEST(Sampling, GroupOfOneRejected) {
  const PolicyParams p(std::vector<double>{0.0, 0.0}, 0, 0);
  EXPECT_THROW(sample_group(p, two_way(), 1, 1.0, 0), ConfigError);
}

TEST(LogprobGrad, TwoResponseOracle) {
  const PolicyParams p(std::vector<double>{0.0, 0.0}, 0, 0);
  const auto g = logprob_grad(p, two_way(), 0, 1.0);
  EXPECT_DOUBLE_EQ(g[0], 0.5);
  EXPECT_DOUBLE_EQ(g[1], -0.5);
  auto f = [&](const PolicyParams& q) { return log_probabilities(q, two_way(), 1.0)[0]; };
  EXPECT_NEAR(checks::central_difference(f, p, 0), 0.5, 1e-8);
  EXPECT_NEAR(checks::central_difference(f, p, 1), -0.5, 1e-8);
}

TEST(LogprobGrad, FiniteDifferences) {
  Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    const std::size_t dim = 8 + rng.below(9);
    const auto prompt = checks::random_prompt(rng, 2 + rng.below(6), dim);
    const auto p = checks::random_params(rng, dim, 2.0);
    const double temp = 0.5 + rng.uniform() * 1.5;
    const std::size_t i = rng.below(prompt.size());
    const auto analytic = logprob_grad(p, prompt, i, temp);
    const auto numeric = checks::numeric_gradient(
        [&](const PolicyParams& q) { return log_probabilities(q, prompt, temp)[i]; }, p);
    EXPECT_LT(checks::relative_error(analytic, numeric), 1e-5);
  }
}

TEST(LogprobGrad, ScoreIdentity) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto prompt = checks::random_prompt(rng, 5, 12);
    const auto p = checks::random_params(rng, 12, t == 0 ? 0.0 : 1.0);
    const auto pi = probabilities(p, prompt, 1.0);
    std::vector<double> s(12, 0.0);
    for (std::size_t i = 0; i < prompt.size(); ++i) {
      const auto g = logprob_grad(p, prompt, i, 1.0);
      for (std::size_t j = 0; j < 12; ++j) s[j] += pi[i] * g[j];
    }
    for (double x : s) EXPECT_NEAR(x, 0.0, 1e-9);
  }
}

TEST(Greedy, FirstMaximumWins) {
  const PolicyParams p(std::vector<double>{0.0, 0.0}, 0, 0);
  EXPECT_EQ(greedy_index(p, two_way()), 0u);
  const PolicyParams q(std::vector<double>{0.0, 0.1}, 0, 0);
  EXPECT_EQ(greedy_index(q, two_way()), 1u);
}

TEST(Params, SnapshotsAndValidation) {
  const PolicyParams p(4, 9);
  EXPECT_EQ(p.dim(), 4u);
  EXPECT_EQ(p.seed(), 9u);
  const auto q = p.updated({1, 2, 3, 4});
  EXPECT_EQ(q.version_tag(), p.version_tag() + 1);
  EXPECT_EQ(p.weights()[0], 0.0);
  EXPECT_THROW(p.updated({1, 2}), PreconditionError);
  EXPECT_THROW(PolicyParams(0, 0), ConfigError);
  EXPECT_THROW(PolicyParams(std::vector<double>{NAN}, 0, 0).check_finite(), NumericError);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  Rng rng(2);
  const auto w = checks::random_params(rng, 33).weights();
  const PolicyParams p(std::vector<double>(w.begin(), w.end()), 7, 5);
  const auto bytes = checkpoint_bytes(p);
  EXPECT_EQ(bytes.substr(0, 8), "ACTCKPT1");
  EXPECT_EQ(bytes.size(), 8u + 24u + 33u * 8u);
  EXPECT_EQ(checkpoint_from_bytes(bytes), p);

  const std::string path = ::testing::TempDir() + "policy_rt.bin";
  save_checkpoint(p, path);
  EXPECT_EQ(load_checkpoint(path), p);

  EXPECT_THROW(checkpoint_from_bytes("garbage"), DataError);
  EXPECT_THROW(checkpoint_from_bytes(bytes.substr(0, bytes.size() - 1)), DataError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(checkpoint_from_bytes(bad), DataError);
}

#pragma once

// Log-linear stochastic policy over a finite response set.
//
//   pi(y_i | prompt) = softmax_i( theta . phi(prompt, y_i) / temperature )
//
// phi is a hashed sparse feature map. Feature keys are strings hashed with
// 64-bit FNV-1a (offset basis 0xcbf29ce484222325, prime 0x100000001b3) and
// reduced modulo the parameter dimension; colliding keys add their values.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actforge/textenv.hpp"

namespace actforge::policy {

inline constexpr std::size_t kDefaultDim = std::size_t{1} << 16;

/// Immutable parameter snapshot. Updates produce a new snapshot with
/// version_tag + 1.
class PolicyParams {
 public:
  explicit PolicyParams(std::size_t dim = kDefaultDim, std::uint64_t seed = 0);
  PolicyParams(std::vector<double> weights, std::uint64_t version_tag, std::uint64_t seed);

  std::size_t dim() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  std::uint64_t version_tag() const { return version_tag_; }
  std::uint64_t seed() const { return seed_; }

  PolicyParams updated(std::vector<double> weights) const;

  /// Throws NumericError if any weight is NaN or infinite.
  void check_finite() const;

  bool operator==(const PolicyParams&) const = default;

 private:
  std::vector<double> weights_;
  std::uint64_t version_tag_ = 0;
  std::uint64_t seed_ = 0;
};

enum class PromptMode { Action, Critic };
enum class ResponseKind { Candidate, OtherAdmissible, Malformed };

/// One element of the finite response set. `tagged` is false exactly for
/// the MALFORMED response, which stands for output lacking action tags.
struct Response {
  std::string action_text;
  bool tagged = true;
  ResponseKind kind = ResponseKind::OtherAdmissible;

  bool operator==(const Response&) const = default;
};

struct PromptSpec {
  textenv::Context context;
  PromptMode mode = PromptMode::Action;
  /// CRITIC mode: (expert, alternative) as stored in the critic example.
  std::optional<std::pair<std::string, std::string>> candidates;
  /// 1 => the first candidate is displayed as "Action 2".
  int permutation_bit = 0;

  static PromptSpec action(textenv::Context ctx);
  static PromptSpec critic(textenv::Context ctx, std::string a_plus, std::string a_minus, int permutation_bit);

  /// Candidates in display order ("Action 1", "Action 2"). CRITIC only.
  std::pair<std::string, std::string> displayed_candidates() const;
};

struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;  // sorted by index, unique

  bool operator==(const SparseVector&) const = default;
  double dot(std::span<const double> dense) const;
};

/// Tagged responses for the admissible actions (candidates flagged in CRITIC
/// mode) followed by the single MALFORMED response.
std::vector<Response> response_set(const PromptSpec& prompt);

SparseVector featurize(const PromptSpec& prompt, const Response& response, std::size_t dim);

/// Feature keys before hashing, for inspection and collision analysis.
std::vector<std::string> feature_keys(const PromptSpec& prompt, const Response& response);

/// A prompt with its response set and feature rows computed once.
struct EncodedPrompt {
  std::vector<Response> responses;
  std::vector<SparseVector> features;
  std::size_t dim = 0;

  std::size_t size() const { return responses.size(); }
  /// Index of the tagged response whose normalized text equals `action`.
  std::optional<std::size_t> find(std::string_view action) const;
};

EncodedPrompt encode(const PromptSpec& prompt, std::size_t dim);

std::vector<double> logits(const PolicyParams& params, const EncodedPrompt& prompt, double temperature);
std::vector<double> log_probabilities(const PolicyParams& params, const EncodedPrompt& prompt, double temperature);
std::vector<double> probabilities(const PolicyParams& params, const EncodedPrompt& prompt, double temperature);
std::vector<double> probabilities(const PolicyParams& params, const PromptSpec& prompt, double temperature);

/// First index of the maximum logit (ties resolve to response-set order).
std::size_t greedy_index(const PolicyParams& params, const EncodedPrompt& prompt);

struct Sample {
  std::size_t index = 0;
  Response response;
  double logprob = 0.0;
};

/// G i.i.d. draws. Stored log-probabilities are std::log of the entries of
/// probabilities(params, prompt, temperature).
std::vector<Sample> sample_group(const PolicyParams& params, const EncodedPrompt& prompt, int group_size,
                                 double temperature, std::uint64_t seed);

/// grad_theta log pi(y_i) = (phi_i - sum_j pi_j phi_j) / temperature.
std::vector<double> logprob_grad(const PolicyParams& params, const EncodedPrompt& prompt, std::size_t response_index,
                                 double temperature);

/// grad += scale * sum_j coeff_j * phi_j. Shared accumulation primitive.
void add_weighted_features(const EncodedPrompt& prompt, std::span<const double> coeff, double scale,
                           std::span<double> grad);

// Checkpoints: 8-byte magic "ACTCKPT1", then little-endian u64 dim,
// u64 version_tag, u64 seed, followed by dim little-endian IEEE-754 doubles.
void save_checkpoint(const PolicyParams& params, const std::string& path);
PolicyParams load_checkpoint(const std::string& path);
std::string checkpoint_bytes(const PolicyParams& params);
PolicyParams checkpoint_from_bytes(const std::string& bytes);

}  // namespace actforge::policy

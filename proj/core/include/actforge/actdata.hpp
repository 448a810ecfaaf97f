#pragma once

// Contrastive critic data: each expert step is paired with alternatives
// sampled from an initial policy; identical alternatives are dropped and the
// display order of the pair is randomized.

#include <cstdint>
#include <string>
#include <vector>

#include "actforge/policy.hpp"
#include "actforge/textenv.hpp"

namespace actforge::actdata {

struct CriticExample {
  textenv::Context context;
  std::string a_plus;
  std::string a_minus;
  int permutation_bit = 0;  // 1 => expert displayed as "Action 2"
  std::string task_id;
  int step_index = 0;

  bool operator==(const CriticExample&) const = default;

  policy::PromptSpec prompt() const;
  /// Throws DataError when the pair is degenerate or a_plus is not admissible.
  void validate() const;
};

/// Draws K ACTION-mode responses and returns their action texts; MALFORMED
/// draws contribute nothing.
std::vector<std::string> sample_alternatives(const policy::PolicyParams& policy0, const textenv::Context& context,
                                             int k, double temperature, std::uint64_t seed);

struct BuildOptions {
  int k = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

/// Alternatives equal to the expert (after normalization) are removed and
/// repeated alternatives within one record are deduplicated before pairing.
std::vector<CriticExample> build_critic_dataset(const textenv::ExpertDataset& expert,
                                                const policy::PolicyParams& policy0, const BuildOptions& opts);

/// The analytic expected example count for K = 1: sum over records of the
/// probability that the single draw is tagged and differs from the expert.
double expected_pair_count_k1(const textenv::ExpertDataset& expert, const policy::PolicyParams& policy0,
                              double temperature);

void write_dataset(const std::vector<CriticExample>& examples, const std::string& path);
std::vector<CriticExample> read_dataset(const std::string& path);
std::string dataset_to_jsonl(const std::vector<CriticExample>& examples);

}  // namespace actforge::actdata

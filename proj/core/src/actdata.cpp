#include "actforge/actdata.hpp"

#include <algorithm>

#include "actforge/errors.hpp"
#include "actforge/rng.hpp"
#include "actforge/text.hpp"
#include "json_io.hpp"

namespace actforge::actdata {

policy::PromptSpec CriticExample::prompt() const {
  return policy::PromptSpec::critic(context, a_plus, a_minus, permutation_bit);
}

void CriticExample::validate() const {
  const std::string plus = text::normalize(a_plus);
  if (plus.empty()) throw DataError("a_plus is empty");
  if (plus == text::normalize(a_minus)) throw DataError("a_plus equals a_minus ('" + plus + "')");
  if (permutation_bit != 0 && permutation_bit != 1) throw DataError("permutation_bit must be 0 or 1");
  const auto& adm = context.admissible_actions;
  if (std::none_of(adm.begin(), adm.end(), [&](const std::string& a) { return text::normalize(a) == plus; }))
    throw DataError("a_plus '" + a_plus + "' is not admissible");
}

std::vector<std::string> sample_alternatives(const policy::PolicyParams& policy0, const textenv::Context& context,
                                             int k, double temperature, std::uint64_t seed) {
  if (k < 1) throw ConfigError("K must be >= 1");
  const auto prompt = policy::encode(policy::PromptSpec::action(context), policy0.dim());
  const auto p = policy::probabilities(policy0, prompt, temperature);
  Rng rng(seed);
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t idx = p.size() - 1;
    for (std::size_t j = 0; j < p.size(); ++j) {
      cum += p[j];
      if (u < cum) {
        idx = j;
        break;
      }
    }
    if (prompt.responses[idx].tagged) out.push_back(prompt.responses[idx].action_text);
  }
  return out;
}

std::vector<CriticExample> build_critic_dataset(const textenv::ExpertDataset& expert,
                                                const policy::PolicyParams& policy0, const BuildOptions& opts) {
  if (opts.k < 1) throw ConfigError("K must be >= 1");
  std::vector<CriticExample> out;
  for (std::size_t r = 0; r < expert.records.size(); ++r) {
    const auto& rec = expert.records[r];
    const std::string plus = text::normalize(rec.expert_action);
    auto alternatives =
        sample_alternatives(policy0, rec.context, opts.k, opts.temperature, derive_seed(opts.seed, r, 1));
    std::vector<std::string> kept;
    for (auto& a : alternatives) {
      const std::string n = text::normalize(a);
      if (n == plus) continue;
      if (std::any_of(kept.begin(), kept.end(), [&](const std::string& x) { return text::normalize(x) == n; }))
        continue;
      kept.push_back(std::move(a));
    }
    Rng bits(derive_seed(opts.seed, r, 2));
    for (auto& a : kept) {
      CriticExample ex;
      ex.context = rec.context;
      ex.a_plus = rec.expert_action;
      ex.a_minus = std::move(a);
      ex.permutation_bit = bits.coin() ? 1 : 0;
      ex.task_id = rec.task_id;
      ex.step_index = rec.step_index;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

double expected_pair_count_k1(const textenv::ExpertDataset& expert, const policy::PolicyParams& policy0,
                              double temperature) {
  double total = 0.0;
  for (const auto& rec : expert.records) {
    const auto prompt = policy::encode(policy::PromptSpec::action(rec.context), policy0.dim());
    const auto p = policy::probabilities(policy0, prompt, temperature);
    const std::string plus = text::normalize(rec.expert_action);
    for (std::size_t j = 0; j < p.size(); ++j)
      if (prompt.responses[j].tagged && text::normalize(prompt.responses[j].action_text) != plus) total += p[j];
  }
  return total;
}

std::string dataset_to_jsonl(const std::vector<CriticExample>& examples) {
  std::string out;
  for (const auto& e : examples) {
    jsonio::json j{{"context", jsonio::context_to_json(e.context)},
                   {"a_plus", e.a_plus},
                   {"a_minus", e.a_minus},
                   {"permutation_bit", e.permutation_bit},
                   {"task_id", e.task_id},
                   {"step_index", e.step_index}};
    out += jsonio::dump_line(j);
    out += '\n';
  }
  return out;
}

void write_dataset(const std::vector<CriticExample>& examples, const std::string& path) {
  jsonio::write_text_file(path, dataset_to_jsonl(examples));
}

std::vector<CriticExample> read_dataset(const std::string& path) {
  std::vector<CriticExample> out;
  for (const auto& [line, j] : jsonio::read_jsonl(path)) {
    CriticExample e;
    try {
      auto cit = j.find("context");
      if (cit == j.end()) throw DataError("missing field 'context'");
      e.context = jsonio::context_from_json(*cit);
      e.a_plus = jsonio::get_field<std::string>(j, "a_plus");
      e.a_minus = jsonio::get_field<std::string>(j, "a_minus");
      e.permutation_bit = jsonio::get_field<int>(j, "permutation_bit");
      e.task_id = jsonio::get_field<std::string>(j, "task_id");
      e.step_index = jsonio::get_field<int>(j, "step_index");
      e.validate();
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& err) {
      throw DataError("line " + std::to_string(line) + ": " + err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace actforge::actdata

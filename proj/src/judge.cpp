// Copyright 2026 The fairjudge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fairjudge/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "fairjudge/error.hpp"
#include "fairjudge/util.hpp"

namespace fairjudge {

using json = nlohmann::json;

namespace {

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Merges logprobs of tokens that trim to the same string.
std::map<std::string, double> merge_tokens(const std::map<std::string, double>& logprobs) {
  std::map<std::string, double> merged;
  for (const auto& [token, lp] : logprobs) {
    const std::string key = trim(token);
    auto [it, inserted] = merged.emplace(key, lp);
    if (!inserted) it->second = log_sum_exp(it->second, lp);
  }
  return merged;
}

// First word of a sampled completion, stripped of quotes and punctuation.
std::string leading_label(const std::string& text) {
  std::string t = trim(text);
  auto is_noise = [](char c) {
    return c == '\'' || c == '"' || c == '`' || c == '(' || c == ')' || c == '.' ||
           c == ',' || c == ':' || c == '*' || c == '[' || c == ']';
  };
  std::size_t b = 0;
  while (b < t.size() && is_noise(t[b])) ++b;
  std::size_t e = b;
  while (e < t.size() && !std::isspace(static_cast<unsigned char>(t[e]))) ++e;
  while (e > b && is_noise(t[e - 1])) --e;
  return t.substr(b, e - b);
}

ChatRequest label_request(const std::string& context, int top_k) {
  ChatRequest req;
  req.messages = {ChatMessage{"user", context}};
  req.temperature = 0.0;
  req.max_tokens = 1;
  req.want_label_logprobs = true;
  req.top_logprobs_k = top_k;
  return req;
}

LabelReadout vote_fallback(const std::string& context, Backend& backend,
                           const JudgeOptions& options) {
  std::map<std::string, int> votes;
  int total = 0;
  for (int v = 0; v < options.fallback_votes; ++v) {
    ChatRequest req;
    req.messages = {ChatMessage{"user", context}};
    req.temperature = options.fallback_temperature;
    req.max_tokens = 4;
    req.seed = static_cast<std::uint64_t>(v);
    const std::string label = leading_label(backend.complete(req).text);
    if (std::find(options.verbalizer.begin(), options.verbalizer.end(), label) !=
        options.verbalizer.end()) {
      ++votes[label];
      ++total;
    }
  }
  if (total == 0) {
    throw CapabilityError("vote fallback: no sampled completion named a verbalizer label");
  }
  LabelReadout out;
  out.fallback_used = true;
  for (const auto& label : options.verbalizer) {
    out.probs[label] = static_cast<double>(votes[label]) / total;
  }
  return out;
}

}  // namespace

LabelProbs restrict_to_verbalizer(const std::map<std::string, double>& logprobs,
                                  const std::vector<std::string>& verbalizer) {
  const auto merged = merge_tokens(logprobs);
  std::vector<double> lps;
  lps.reserve(verbalizer.size());
  for (const auto& label : verbalizer) {
    auto it = merged.find(label);
    if (it == merged.end()) {
      throw CapabilityError("label '" + label + "' missing from top-k logprobs");
    }
    lps.push_back(it->second);
  }
  const double m = *std::max_element(lps.begin(), lps.end());
  double z = 0;
  for (double lp : lps) z += std::exp(lp - m);
  LabelProbs probs;
  for (std::size_t i = 0; i < verbalizer.size(); ++i) {
    probs[verbalizer[i]] = std::exp(lps[i] - m) / z;
  }
  return probs;
}

LabelReadout label_probabilities(const std::string& context, Backend& backend,
                                 const JudgeOptions& options) {
  if (options.verbalizer.size() < 2) {
    throw PreconditionError("verbalizer needs at least two labels");
  }
  const int k = std::max<int>(options.top_logprobs_k,
                              static_cast<int>(options.verbalizer.size()));
  try {
    const ChatResponse response = backend.complete(label_request(context, k));
    if (!response.first_token_logprobs) {
      throw CapabilityError("backend returned no first-token logprobs");
    }
    return LabelReadout{restrict_to_verbalizer(*response.first_token_logprobs,
                                               options.verbalizer),
                        false};
  } catch (const CapabilityError&) {
    if (options.fallback_votes <= 0) throw;
  }
  return vote_fallback(context, backend, options);
}

nlohmann::json to_json(const PreferenceOutcome& outcome) {
  return json{{"pair", to_json(outcome.pair)},
              {"instruction_id", outcome.instruction_id},
              {"probs", outcome.probs},
              {"debiased", outcome.debiased},
              {"fallback_used", outcome.fallback_used}};
}

PreferenceOutcome outcome_from_json(const nlohmann::json& j) {
  PreferenceOutcome out;
  out.pair = pair_from_json(j.at("pair"));
  out.instruction_id = j.at("instruction_id").get<std::string>();
  out.probs = j.at("probs").get<LabelProbs>();
  out.debiased = j.value("debiased", false);
  out.fallback_used = j.value("fallback_used", false);
  return out;
}

void write_outcome_log(std::ostream& out, const std::vector<PreferenceOutcome>& outcomes) {
  for (const auto& o : outcomes) out << to_json(o).dump() << '\n';
}

PreferenceOutcome judge_pair(const ItemContent& item, const PairTask& pair,
                             const Instruction& instruction, const PromptTemplate& tmpl,
                             Backend& backend, bool debias, const JudgeOptions& options) {
  PreferenceOutcome outcome{pair, instruction.id, {}, debias, false};
  const auto forward =
      label_probabilities(render_pairwise_prompt(item, pair, instruction, tmpl), backend,
                          options);
  if (!debias) {
    outcome.probs = forward.probs;
    outcome.fallback_used = forward.fallback_used;
    return outcome;
  }
  if (options.verbalizer.size() != 2) {
    throw PreconditionError("position debiasing needs exactly two labels");
  }
  const auto backward = label_probabilities(
      render_pairwise_prompt(item, pair.swapped(), instruction, tmpl), backend, options);
  const std::string& a = options.verbalizer[0];
  const std::string& b = options.verbalizer[1];
  // In the swapped render pair.first sits in slot B.
  outcome.probs[a] = (forward.probs.at(a) + backward.probs.at(b)) / 2.0;
  outcome.probs[b] = (forward.probs.at(b) + backward.probs.at(a)) / 2.0;
  outcome.fallback_used = forward.fallback_used || backward.fallback_used;
  return outcome;
}

std::vector<PreferenceOutcome> judge_pairs(const UnlabeledDataset& dataset,
                                           const std::vector<PairTask>& pairs,
                                           const Instruction& instruction,
                                           const PromptTemplate& tmpl, Backend& backend,
                                           bool debias, const JudgeOptions& options) {
  std::unordered_map<std::string, const ItemContent*> by_id;
  for (const auto& it : dataset.items) by_id.emplace(it.id, &it);
  return parallel_map<PreferenceOutcome>(pairs.size(), options.workers, [&](std::size_t i) {
    auto it = by_id.find(pairs[i].item_id);
    if (it == by_id.end()) {
      throw PreconditionError("pair refers to unknown item '" + pairs[i].item_id + "'");
    }
    return judge_pair(*it->second, pairs[i], instruction, tmpl, backend, debias, options);
  });
}

nlohmann::json to_json(const PreferenceDistribution& dist) {
  return json{{"instruction_id", dist.instruction_id},
              {"rates", dist.rates},
              {"n_pairs", dist.n_pairs}};
}

std::vector<std::string> argmax_labels(const LabelProbs& probs) {
  std::vector<std::string> out;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [label, p] : probs) {
    if (p > best) {
      best = p;
      out.assign(1, label);
    } else if (p == best) {
      out.push_back(label);
    }
  }
  return out;
}

PreferenceDistribution distribution_from_outcomes(
    const std::string& instruction_id, const std::vector<PreferenceOutcome>& outcomes,
    const std::vector<std::string>& verbalizer) {
  if (outcomes.empty()) {
    throw PreconditionError("preference distribution needs at least one outcome");
  }
  LabelProbs counts;
  for (const auto& label : verbalizer) counts[label] = 0.0;
  for (const auto& o : outcomes) {
    const auto winners = argmax_labels(o.probs);
    const double share = 1.0 / static_cast<double>(winners.size());
    for (const auto& w : winners) {
      auto it = counts.find(w);
      if (it == counts.end()) {
        throw PreconditionError("outcome carries label '" + w + "' outside the verbalizer");
      }
      it->second += share;
    }
  }
  PreferenceDistribution dist{instruction_id, {}, outcomes.size()};
  for (const auto& [label, c] : counts) {
    dist.rates[label] = c / static_cast<double>(outcomes.size());
  }
  return dist;
}

JudgedSample preference_distribution(const Instruction& instruction,
                                     const std::vector<PairTask>& pairs,
                                     const UnlabeledDataset& dataset,
                                     const PromptTemplate& tmpl, Backend& backend,
                                     bool debias, const JudgeOptions& options) {
  if (pairs.empty()) {
    throw PreconditionError("preference distribution needs a non-empty pair list");
  }
  JudgedSample sample;
  sample.outcomes = judge_pairs(dataset, pairs, instruction, tmpl, backend, debias, options);
  sample.distribution =
      distribution_from_outcomes(instruction.id, sample.outcomes, options.verbalizer);
  return sample;
}

std::vector<PairTask> sample_pairs(const UnlabeledDataset& dataset, std::size_t n,
                                   std::uint64_t seed) {
  if (n < 1) throw PreconditionError("sample_pairs: n must be >= 1");
  // Cumulative pair counts so a flat index maps to (item, i, j).
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& item : dataset.items) {
    offsets.push_back(total);
    const auto c = item.candidates.size();
    total += c * (c > 0 ? c - 1 : 0);
  }
  if (total == 0) {
    throw PreconditionError("sample_pairs: dataset has no item with two candidates");
  }
  std::mt19937_64 engine(seed);
  std::vector<PairTask> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t flat = bounded_draw(engine, total);
    const auto item_pos = static_cast<std::size_t>(
        std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin() - 1);
    const auto& item = dataset.items[item_pos];
    const std::size_t local = flat - offsets[item_pos];
    const std::size_t c = item.candidates.size();
    const std::size_t i = local / (c - 1);
    std::size_t j = local % (c - 1);
    if (j >= i) ++j;
    out.push_back(PairTask{item.id, item.candidates[i].id, item.candidates[j].id,
                           static_cast<std::int64_t>(k)});
  }
  return out;
}

double pointwise_from_probs(const std::array<double, 5>& probs, PointwiseMode mode) {
  double total = 0;
  for (double p : probs) {
    if (p < 0) throw PreconditionError("pointwise probabilities must be non-negative");
    total += p;
  }
  if (total <= 0) throw CapabilityError("no probability mass on score tokens");
  if (mode == PointwiseMode::kArgmax) {
    const auto it = std::max_element(probs.begin(), probs.end());
    return static_cast<double>(it - probs.begin() + 1);
  }
  double weighted = 0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    weighted += static_cast<double>(s + 1) * probs[s] / total;
  }
  return weighted;
}

double pointwise_score(const ItemContent& item, const Candidate& candidate,
                       const Instruction& instruction, Backend& backend,
                       PointwiseMode mode, const JudgeOptions& options) {
  const ChatResponse response = backend.complete(label_request(
      render_pointwise_prompt(item, candidate, instruction),
      std::max(options.top_logprobs_k, 5)));
  if (!response.first_token_logprobs) {
    throw CapabilityError("backend returned no first-token logprobs");
  }
  const auto merged = merge_tokens(*response.first_token_logprobs);
  std::array<double, 5> lps;
  lps.fill(-std::numeric_limits<double>::infinity());
  bool any = false;
  for (int s = 1; s <= 5; ++s) {
    if (auto it = merged.find(std::to_string(s)); it != merged.end()) {
      lps[s - 1] = it->second;
      any = true;
    }
  }
  if (!any) throw CapabilityError("no score token 1-5 in top-k logprobs");
  const double m = *std::max_element(lps.begin(), lps.end());
  std::array<double, 5> probs;
  for (std::size_t s = 0; s < 5; ++s) probs[s] = std::exp(lps[s] - m);
  return pointwise_from_probs(probs, mode);
}

}  // namespace fairjudge

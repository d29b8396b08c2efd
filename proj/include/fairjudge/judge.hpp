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

// Pairwise judging: label probabilities, position debiasing, and the
// decision-rate distribution an instruction induces over a pair sample.

#ifndef FAIRJUDGE_JUDGE_HPP_
#define FAIRJUDGE_JUDGE_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairjudge/backend.hpp"
#include "fairjudge/model.hpp"
#include "fairjudge/templates.hpp"

namespace fairjudge {

using LabelProbs = std::map<std::string, double>;

struct JudgeOptions {
  std::vector<std::string> verbalizer{"A", "B"};
  int top_logprobs_k = 5;
  /// When > 0, endpoints without usable logprobs are polled this many times
  /// at `fallback_temperature` and the label votes become the probabilities.
  int fallback_votes = 0;
  double fallback_temperature = 1.0;
  /// Concurrent backend calls when judging many pairs.
  std::size_t workers = 1;
};

struct LabelReadout {
  LabelProbs probs;
  bool fallback_used = false;
};

/// Softmax of first-token logprobs restricted to the verbalizer. Tokens are
/// compared after trimming whitespace; duplicates are merged by log-sum-exp.
/// Throws CapabilityError unless every label is present.
LabelProbs restrict_to_verbalizer(const std::map<std::string, double>& logprobs,
                                  const std::vector<std::string>& verbalizer);

/// p(label | context) from `backend`, with the vote fallback if configured.
LabelReadout label_probabilities(const std::string& context, Backend& backend,
                                 const JudgeOptions& options = {});

struct PreferenceOutcome {
  PairTask pair;
  std::string instruction_id;
  LabelProbs probs;
  bool debiased = false;
  bool fallback_used = false;

  bool operator==(const PreferenceOutcome&) const = default;
};

nlohmann::json to_json(const PreferenceOutcome& outcome);
PreferenceOutcome outcome_from_json(const nlohmann::json& j);
/// Line-delimited outcome log, one JSON record per line.
void write_outcome_log(std::ostream& out, const std::vector<PreferenceOutcome>& outcomes);

/// Judges one ordered pair. With `debias`, both slot orders are judged and
/// each candidate's win probability is averaged across them, reported in the
/// frame of `pair` (label 0 = pair.first). Debiasing needs two labels.
PreferenceOutcome judge_pair(const ItemContent& item, const PairTask& pair,
                             const Instruction& instruction, const PromptTemplate& tmpl,
                             Backend& backend, bool debias,
                             const JudgeOptions& options = {});

/// Judges every pair (concurrently up to options.workers); results keep input order.
std::vector<PreferenceOutcome> judge_pairs(const UnlabeledDataset& dataset,
                                           const std::vector<PairTask>& pairs,
                                           const Instruction& instruction,
                                           const PromptTemplate& tmpl, Backend& backend,
                                           bool debias, const JudgeOptions& options = {});

struct PreferenceDistribution {
  std::string instruction_id;
  LabelProbs rates;
  std::size_t n_pairs = 0;

  bool operator==(const PreferenceDistribution&) const = default;
};

nlohmann::json to_json(const PreferenceDistribution& dist);

/// Labels whose probability equals the outcome's maximum.
std::vector<std::string> argmax_labels(const LabelProbs& probs);

/// Decision rates: each outcome adds 1 to its strict argmax label, or splits 1
/// evenly across exactly tied maximal labels; rates are counts over N.
PreferenceDistribution distribution_from_outcomes(
    const std::string& instruction_id, const std::vector<PreferenceOutcome>& outcomes,
    const std::vector<std::string>& verbalizer);

struct JudgedSample {
  PreferenceDistribution distribution;
  std::vector<PreferenceOutcome> outcomes;
};

/// Judges `pairs` under `instruction` and counts the decision rates.
JudgedSample preference_distribution(const Instruction& instruction,
                                     const std::vector<PairTask>& pairs,
                                     const UnlabeledDataset& dataset,
                                     const PromptTemplate& tmpl, Backend& backend,
                                     bool debias, const JudgeOptions& options = {});

/// n uniform draws, with replacement, from all ordered pairs of the dataset.
/// Deterministic in `seed`; seed_index records the draw number.
std::vector<PairTask> sample_pairs(const UnlabeledDataset& dataset, std::size_t n,
                                   std::uint64_t seed);

enum class PointwiseMode { kArgmax, kWeighted };

/// Score from probabilities over the tokens "1".."5" (renormalized). Argmax
/// takes the lowest score among exact ties.
double pointwise_from_probs(const std::array<double, 5>& probs, PointwiseMode mode);

/// Likert score of a single candidate (the Scoring / G-Eval style baselines).
double pointwise_score(const ItemContent& item, const Candidate& candidate,
                       const Instruction& instruction, Backend& backend,
                       PointwiseMode mode, const JudgeOptions& options = {});

}  // namespace fairjudge

#endif  // FAIRJUDGE_JUDGE_HPP_

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

// Label-free objectives for an evaluation instruction. Every objective is
// oriented so that larger is better and 0 is the best attainable value.
//
//   fairness       -(1/J) * sum_j |1/J - rate_j|          over decision rates
//   confidence     mean over outcomes of sum_j p_j ln p_j   (negative entropy)
//   cf_confidence  -(sum_j p_j ln p_j + ln J) on the "[N/A]" render
//   calibration    -|mean(ln p_A - ln p_B)|
//
// Probabilities are floored at 1e-12 before any logarithm.

#ifndef FAIRJUDGE_OBJECTIVES_HPP_
#define FAIRJUDGE_OBJECTIVES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairjudge/judge.hpp"

namespace fairjudge {

enum class ObjectiveKind { kFairness, kConfidence, kCfConfidence, kCalibration };

std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(std::string_view name);
const std::vector<ObjectiveKind>& all_objective_kinds();

inline constexpr double kProbabilityFloor = 1e-12;

struct ObjectiveScore {
  std::string instruction_id;
  ObjectiveKind kind = ObjectiveKind::kFairness;
  double value = 0;
  std::size_t n_pairs = 0;
  /// Content-free confidence before orientation (sum p ln p); logged only.
  std::optional<double> raw;

  bool operator==(const ObjectiveScore&) const = default;
};

nlohmann::json to_json(const ObjectiveScore& score);

double fairness(const PreferenceDistribution& dist);
double confidence(const std::vector<PreferenceOutcome>& outcomes);
/// sum_j p_j ln p_j of one distribution, with 0 ln 0 = 0.
double negative_entropy(const LabelProbs& probs);
/// Orientation-normalized content-free confidence of one distribution.
double cf_confidence_from_probs(const LabelProbs& probs);
double cf_confidence(const Instruction& instruction, const PromptTemplate& tmpl,
                     Backend& backend, const JudgeOptions& options = {});
/// Uses options-style label order: verbalizer[0] is A, verbalizer[1] is B.
double calibration(const std::vector<PreferenceOutcome>& outcomes,
                   const std::vector<std::string>& verbalizer = {"A", "B"});

/// Everything computed while scoring one instruction.
struct InstructionEvaluation {
  ObjectiveScore score;
  PreferenceDistribution distribution;
  std::vector<PreferenceOutcome> outcomes;
};

/// Judges `pairs` under `instruction` and scores it with `kind`.
InstructionEvaluation evaluate_instruction(const Instruction& instruction, ObjectiveKind kind,
                                           const UnlabeledDataset& dataset,
                                           const std::vector<PairTask>& pairs,
                                           Backend& backend, const PromptTemplate& tmpl,
                                           bool debias, const JudgeOptions& options = {});

/// Scores already-judged outcomes; cf_confidence also needs the backend.
ObjectiveScore score_outcomes(const Instruction& instruction, ObjectiveKind kind,
                              const std::vector<PreferenceOutcome>& outcomes,
                              const PreferenceDistribution& distribution, Backend& backend,
                              const PromptTemplate& tmpl, const JudgeOptions& options = {});

ObjectiveScore score_instruction(const Instruction& instruction, ObjectiveKind kind,
                                 const UnlabeledDataset& dataset,
                                 const std::vector<PairTask>& pairs, Backend& backend,
                                 const PromptTemplate& tmpl, bool debias = false,
                                 const JudgeOptions& options = {});

}  // namespace fairjudge

#endif  // FAIRJUDGE_OBJECTIVES_HPP_

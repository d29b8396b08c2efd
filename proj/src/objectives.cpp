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

#include "fairjudge/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "fairjudge/error.hpp"

namespace fairjudge {

using json = nlohmann::json;

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kFairness: return "fairness";
    case ObjectiveKind::kConfidence: return "confidence";
    case ObjectiveKind::kCfConfidence: return "cf_confidence";
    case ObjectiveKind::kCalibration: return "calibration";
  }
  return "unknown";
}

ObjectiveKind objective_kind_from_string(std::string_view name) {
  for (auto kind : all_objective_kinds()) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown objective '" + std::string(name) +
                        "' (fairness, confidence, cf_confidence, calibration)");
}

const std::vector<ObjectiveKind>& all_objective_kinds() {
  static const std::vector<ObjectiveKind> kinds{
      ObjectiveKind::kFairness, ObjectiveKind::kConfidence, ObjectiveKind::kCfConfidence,
      ObjectiveKind::kCalibration};
  return kinds;
}

nlohmann::json to_json(const ObjectiveScore& score) {
  json j{{"instruction_id", score.instruction_id},
         {"kind", to_string(score.kind)},
         {"value", score.value},
         {"n_pairs", score.n_pairs}};
  if (score.raw) j["raw"] = *score.raw;
  return j;
}

double fairness(const PreferenceDistribution& dist) {
  const auto j = static_cast<double>(dist.rates.size());
  if (j < 1) throw PreconditionError("fairness: empty distribution");
  const double prior = 1.0 / j;
  double gap = 0;
  for (const auto& [_, rate] : dist.rates) gap += std::abs(prior - rate);
  return -gap / j;
}

double negative_entropy(const LabelProbs& probs) {
  double s = 0;
  for (const auto& [_, p] : probs) {
    if (p > 0) s += p * std::log(std::max(p, kProbabilityFloor));
  }
  return s;
}

double confidence(const std::vector<PreferenceOutcome>& outcomes) {
  if (outcomes.empty()) throw PreconditionError("confidence: no outcomes");
  double total = 0;
  for (const auto& o : outcomes) total += negative_entropy(o.probs);
  return total / static_cast<double>(outcomes.size());
}

double cf_confidence_from_probs(const LabelProbs& probs) {
  if (probs.empty()) throw PreconditionError("cf_confidence: empty distribution");
  const double value =
      -(negative_entropy(probs) + std::log(static_cast<double>(probs.size())));
  // Uniform input gives exactly 0 analytically; clamp rounding residue.
  return std::min(value, 0.0);
}

double cf_confidence(const Instruction& instruction, const PromptTemplate& tmpl,
                     Backend& backend, const JudgeOptions& options) {
  const auto readout =
      label_probabilities(render_content_free_prompt(instruction, tmpl), backend, options);
  return cf_confidence_from_probs(readout.probs);
}

double calibration(const std::vector<PreferenceOutcome>& outcomes,
                   const std::vector<std::string>& verbalizer) {
  if (outcomes.empty()) throw PreconditionError("calibration: no outcomes");
  if (verbalizer.size() != 2) {
    throw PreconditionError("calibration is defined for two labels");
  }
  double sum = 0;
  for (const auto& o : outcomes) {
    const double pa = std::max(o.probs.at(verbalizer[0]), kProbabilityFloor);
    const double pb = std::max(o.probs.at(verbalizer[1]), kProbabilityFloor);
    sum += std::log(pa) - std::log(pb);
  }
  return -std::abs(sum / static_cast<double>(outcomes.size()));
}

ObjectiveScore score_outcomes(const Instruction& instruction, ObjectiveKind kind,
                              const std::vector<PreferenceOutcome>& outcomes,
                              const PreferenceDistribution& distribution, Backend& backend,
                              const PromptTemplate& tmpl, const JudgeOptions& options) {
  ObjectiveScore score{instruction.id, kind, 0.0, outcomes.size(), std::nullopt};
  switch (kind) {
    case ObjectiveKind::kFairness:
      score.value = fairness(distribution);
      break;
    case ObjectiveKind::kConfidence:
      score.value = confidence(outcomes);
      break;
    case ObjectiveKind::kCfConfidence: {
      const auto readout =
          label_probabilities(render_content_free_prompt(instruction, tmpl), backend, options);
      score.raw = negative_entropy(readout.probs);
      score.value = cf_confidence_from_probs(readout.probs);
      break;
    }
    case ObjectiveKind::kCalibration:
      score.value = calibration(outcomes, options.verbalizer);
      break;
  }
  return score;
}

InstructionEvaluation evaluate_instruction(const Instruction& instruction, ObjectiveKind kind,
                                           const UnlabeledDataset& dataset,
                                           const std::vector<PairTask>& pairs,
                                           Backend& backend, const PromptTemplate& tmpl,
                                           bool debias, const JudgeOptions& options) {
  auto sample =
      preference_distribution(instruction, pairs, dataset, tmpl, backend, debias, options);
  InstructionEvaluation eval;
  eval.score = score_outcomes(instruction, kind, sample.outcomes, sample.distribution,
                              backend, tmpl, options);
  eval.distribution = std::move(sample.distribution);
  eval.outcomes = std::move(sample.outcomes);
  return eval;
}

ObjectiveScore score_instruction(const Instruction& instruction, ObjectiveKind kind,
                                 const UnlabeledDataset& dataset,
                                 const std::vector<PairTask>& pairs, Backend& backend,
                                 const PromptTemplate& tmpl, bool debias,
                                 const JudgeOptions& options) {
  return evaluate_instruction(instruction, kind, dataset, pairs, backend, tmpl, debias,
                              options)
      .score;
}

}  // namespace fairjudge

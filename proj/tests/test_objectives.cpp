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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fairjudge/error.hpp"
#include "fairjudge/objectives.hpp"
#include "fairjudge/simulated.hpp"
#include "test_support.hpp"

namespace fairjudge {
namespace {

PreferenceDistribution dist(LabelProbs rates) { return {"i", std::move(rates), 10}; }

PreferenceOutcome outcome(double a) {
  return PreferenceOutcome{{"d", "x", "y", 0}, "i", {{"A", a}, {"B", 1 - a}}};
}

TEST(Fairness, TwoLabelValues) {
  EXPECT_EQ(fairness(dist({{"A", 0.5}, {"B", 0.5}})), 0.0);
  EXPECT_EQ(fairness(dist({{"A", 1.0}, {"B", 0.0}})), -0.5);
  EXPECT_NEAR(fairness(dist({{"A", 0.788}, {"B", 0.212}})), -0.288, 1e-12);
}

TEST(Fairness, ThreeLabelValue) {
  // Frozen from an independent evaluation of -(1/J) sum |1/J - p_j|.
  EXPECT_NEAR(fairness(dist({{"A", 0.5}, {"B", 0.3}, {"C", 0.2}})), -0.1111111111111111,
              1e-15);
}

TEST(Fairness, PropertiesOnRandomDistributions) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    const double a = u(rng);
    const double f = fairness(dist({{"A", a}, {"B", 1 - a}}));
    EXPECT_LE(f, 0.0);
    EXPECT_GE(f, -0.5);
    // Two labels: fairness is minus the distance of p_A from one half.
    EXPECT_NEAR(f, -std::abs(a - 0.5), 1e-12);
    // Label symmetry.
    EXPECT_EQ(f, fairness(dist({{"A", 1 - a}, {"B", a}})));
  }
}

TEST(Confidence, MeanNegativeEntropy) {
  EXPECT_NEAR(confidence({outcome(0.8), outcome(0.5)}), -0.5967748020490666, 1e-12);
  EXPECT_EQ(confidence({outcome(1.0)}), 0.0);
  EXPECT_THROW(confidence({}), PreconditionError);
}

TEST(CfConfidence, ZeroAtUniformNegativeOtherwise) {
  EXPECT_EQ(cf_confidence_from_probs({{"A", 0.5}, {"B", 0.5}}), 0.0);
  EXPECT_NEAR(cf_confidence_from_probs({{"A", 0.9}, {"B", 0.1}}), -0.3680642071684971, 1e-12);
  EXPECT_NEAR(cf_confidence_from_probs({{"A", 1.0}, {"B", 0.0}}), -std::log(2.0), 1e-12);
  for (double a = 0.0; a <= 1.0; a += 0.05) {
    EXPECT_LE(cf_confidence_from_probs({{"A", a}, {"B", 1 - a}}), 0.0);
  }
}

TEST(Calibration, AbsoluteMeanLogRatio) {
  EXPECT_NEAR(calibration({outcome(0.8), outcome(0.3)}, {"A", "B"}), -0.26949825036634345,
              1e-12);
  EXPECT_EQ(calibration({outcome(0.5)}, {"A", "B"}), 0.0);
  // Zero probabilities are floored rather than producing infinities.
  EXPECT_NEAR(calibration({outcome(1.0)}, {"A", "B"}), -27.631021115928547, 1e-9);
  EXPECT_THROW(calibration({outcome(0.5)}, {"A", "B", "C"}), PreconditionError);
}

TEST(ObjectiveKind, NamesRoundTrip) {
  for (auto kind : all_objective_kinds()) {
    EXPECT_EQ(objective_kind_from_string(to_string(kind)), kind);
  }
  EXPECT_THROW(objective_kind_from_string("accuracy"), ValidationError);
}

TEST(ScoreInstruction, ContentFreeUsesNaPrompt) {
  // Uniform on "[N/A]" input, skewed otherwise.
  const auto tmpl = canonical_template(TemplateKind::kSummarization);
  FunctionBackend backend("cf", [&](const ChatRequest& r) {
    const auto slots = tmpl.match(r.messages.back().content);
    const bool na = slots && slots->at("SOURCE_TEXT") == "[N/A]";
    const double p = na ? 0.5 : 0.9;
    return ChatResponse{"A", std::map<std::string, double>{{"A", std::log(p)},
                                                           {"B", std::log(1 - p)}}};
  });
  const auto ds = testing::small_dataset({1, 2, 3});
  const auto view = ds.unlabeled();
  const auto pairs = enumerate_pairs(view.items[0]);
  const auto& seed = ds.aspects[0].seed_instruction;
  const auto cf = score_instruction(seed, ObjectiveKind::kCfConfidence, view, pairs, backend, tmpl);
  EXPECT_EQ(cf.value, 0.0);
  ASSERT_TRUE(cf.raw.has_value());
  EXPECT_NEAR(*cf.raw, -std::log(2.0), 1e-12);
  const auto fair = score_instruction(seed, ObjectiveKind::kFairness, view, pairs, backend, tmpl);
  EXPECT_EQ(fair.value, -0.5);
  EXPECT_EQ(fair.n_pairs, 6u);
  const auto conf = score_instruction(seed, ObjectiveKind::kConfidence, view, pairs, backend, tmpl);
  EXPECT_NEAR(conf.value, 0.9 * std::log(0.9) + 0.1 * std::log(0.1), 1e-12);
}

TEST(ScoreInstruction, DebiasedFairnessOfPureSlotBiasIsZero) {
  SimulatedEvaluatorParams p;
  p.quality_sensitivity = 0;
  p.position_bias = 3.0;
  const auto ds = testing::small_dataset({1, 2, 3, 4});
  const auto tmpl = canonical_template(TemplateKind::kSummarization);
  SimulatedJudgeBackend judge(p, SimulatedWorld::from_dataset(ds, "coherence"), tmpl);
  const auto view = ds.unlabeled();
  const auto pairs = enumerate_pairs(view.items[0]);
  const auto& seed = ds.aspects[0].seed_instruction;
  EXPECT_EQ(score_instruction(seed, ObjectiveKind::kFairness, view, pairs, judge, tmpl, false)
                .value,
            -0.5);
  EXPECT_EQ(score_instruction(seed, ObjectiveKind::kFairness, view, pairs, judge, tmpl, true)
                .value,
            0.0);
}

}  // namespace
}  // namespace fairjudge

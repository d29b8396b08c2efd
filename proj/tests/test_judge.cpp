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
#include <map>
#include <random>
#include <set>

#include "fairjudge/error.hpp"
#include "fairjudge/judge.hpp"
#include "fairjudge/templates.hpp"
#include "test_support.hpp"

namespace fairjudge {
namespace {

ItemContent two_item() {
  return ItemContent{"d0", "Source body.", {{"x", "Text X"}, {"y", "Text Y"}}};
}

Instruction instr(const std::string& text = "Which summary is more coherent?") {
  return Instruction{"i0", text, "coherence", std::nullopt, 0};
}

/// Answers pairwise prompts with p(A) looked up by the candidate text in slot A.
std::shared_ptr<FunctionBackend> slot_lookup_backend(std::map<std::string, double> p_first,
                                                     int* calls = nullptr) {
  const auto tmpl = canonical_template(TemplateKind::kSummarization);
  return std::make_shared<FunctionBackend>("lookup", [=](const ChatRequest& r) {
    if (calls) ++*calls;
    const auto slots = tmpl.match(r.messages.back().content);
    if (!slots) throw ProtocolError("unexpected prompt");
    const double p = p_first.at(slots->at("SUMMARY_1"));
    return ChatResponse{p >= 0.5 ? "A" : "B",
                        std::map<std::string, double>{{"A", std::log(p)},
                                                      {"B", std::log(1 - p)},
                                                      {"C", std::log(1e-6)}}};
  });
}

TEST(Template, CanonicalSummarizationBody) {
  const auto t = canonical_template(TemplateKind::kSummarization);
  EXPECT_EQ(t.body(),
            "Source text: [SOURCE_TEXT]\n\nSummary A: [SUMMARY_1]\n\nSummary B: [SUMMARY_2]"
            "\n\nQuestion: [INSTRUCTION]\nAnswer:");
}

TEST(Template, ParaphraseBodyKeepsTrailingSpaces) {
  const auto rendered = render_paraphrase_prompt(instr("Judge it."), "coherence");
  EXPECT_EQ(rendered,
            "Paraphrase the following instruction \nfor a pairwise comparison task. \n"
            "Do not change the keyword \"coherence\". \nBe diverse and creative in "
            "paraphrasing. \nReturn the instruction only. \n\nInput: Judge it.\n\nOutput:");
}

TEST(Template, ShippedFilesMatchTheBuiltInBodies) {
  const std::filesystem::path dir = FAIRJUDGE_DATA_DIR "/templates";
  for (auto kind : {TemplateKind::kSummarization, TemplateKind::kDialog,
                    TemplateKind::kPointwise, TemplateKind::kParaphrase}) {
    EXPECT_EQ(load_template(dir / (to_string(kind) + ".txt"), kind), canonical_template(kind))
        << to_string(kind);
  }
}

TEST(Template, RejectsMissingDuplicateOrForeignSlots) {
  EXPECT_THROW(SlotTemplate(TemplateKind::kSummarization, "[SOURCE_TEXT] [SUMMARY_1]"),
               ValidationError);
  EXPECT_THROW(SlotTemplate(TemplateKind::kSummarization,
                            "[SOURCE_TEXT][SUMMARY_1][SUMMARY_2][INSTRUCTION][INSTRUCTION]"),
               ValidationError);
  EXPECT_THROW(SlotTemplate(TemplateKind::kSummarization,
                            "[SOURCE_TEXT][SUMMARY_1][SUMMARY_2][INSTRUCTION][ASPECT]"),
               ValidationError);
  // Unknown bracketed words are literal text.
  EXPECT_NO_THROW(SlotTemplate(TemplateKind::kSummarization,
                               "[NOTE] [SOURCE_TEXT][SUMMARY_1] | [SUMMARY_2] [INSTRUCTION]"));
}

TEST(Template, RenderIsSinglePass) {
  const auto t = canonical_template(TemplateKind::kSummarization);
  ItemContent item{"d", "mentions [SUMMARY_2] literally", {{"a", "[INSTRUCTION]"}, {"b", "b"}}};
  const auto out = render_pairwise_prompt(item, PairTask{"d", "a", "b", 0}, instr("Q?"), t);
  EXPECT_NE(out.find("Source text: mentions [SUMMARY_2] literally"), std::string::npos);
  EXPECT_NE(out.find("Summary A: [INSTRUCTION]"), std::string::npos);
  EXPECT_NE(out.find("Question: Q?"), std::string::npos);
}

TEST(Template, MatchInvertsRender) {
  const auto t = canonical_template(TemplateKind::kSummarization);
  const auto item = two_item();
  const auto out = render_pairwise_prompt(item, PairTask{"d0", "y", "x", 0}, instr(), t);
  const auto slots = t.match(out);
  ASSERT_TRUE(slots.has_value());
  EXPECT_EQ(slots->at("SUMMARY_1"), "Text Y");
  EXPECT_EQ(slots->at("SUMMARY_2"), "Text X");
  EXPECT_EQ(slots->at("INSTRUCTION"), instr().text);
  EXPECT_FALSE(t.match("something else").has_value());
}

TEST(Template, ContentFreeFillsEveryContentSlot) {
  const auto t = canonical_template(TemplateKind::kSummarization);
  const auto out = render_content_free_prompt(instr(), t);
  const auto slots = t.match(out);
  ASSERT_TRUE(slots.has_value());
  EXPECT_EQ(slots->at("SOURCE_TEXT"), "[N/A]");
  EXPECT_EQ(slots->at("SUMMARY_1"), "[N/A]");
  EXPECT_EQ(slots->at("SUMMARY_2"), "[N/A]");
}

TEST(Template, RenderErrors) {
  const auto t = canonical_template(TemplateKind::kSummarization);
  const auto item = two_item();
  EXPECT_THROW(render_pairwise_prompt(item, PairTask{"other", "x", "y", 0}, instr(), t),
               RenderError);
  EXPECT_THROW(render_pairwise_prompt(item, PairTask{"d0", "x", "x", 0}, instr(), t),
               RenderError);
  EXPECT_THROW(render_pairwise_prompt(item, PairTask{"d0", "x", "zz", 0}, instr(), t),
               RenderError);
}

TEST(Template, LoadStripsOneTrailingNewline) {
  testing::TempDir dir;
  const auto body = canonical_template(TemplateKind::kDialog).body();
  std::ofstream(dir / "t.txt") << body << "\n";
  EXPECT_EQ(load_template(dir / "t.txt", TemplateKind::kDialog).body(), body);
  EXPECT_THROW(load_template(dir / "missing.txt", TemplateKind::kDialog), ValidationError);
}

TEST(Verbalizer, RestrictMergesWhitespaceVariantsAndRenormalizes) {
  const std::map<std::string, double> lps{
      {"A", std::log(0.5)}, {" A", std::log(0.1)}, {"B", std::log(0.2)}, {"C", std::log(0.2)}};
  const auto probs = restrict_to_verbalizer(lps, {"A", "B"});
  EXPECT_NEAR(probs.at("A"), 0.75, 1e-12);
  EXPECT_NEAR(probs.at("B"), 0.25, 1e-12);
  EXPECT_THROW(restrict_to_verbalizer({{"A", -0.1}}, {"A", "B"}), CapabilityError);
}

TEST(JudgePair, RawReadsSlotProbabilities) {
  auto backend = slot_lookup_backend({{"Text X", 0.8}, {"Text Y", 0.6}});
  const auto t = canonical_template(TemplateKind::kSummarization);
  const auto o = judge_pair(two_item(), PairTask{"d0", "x", "y", 0}, instr(), t, *backend, false);
  EXPECT_NEAR(o.probs.at("A"), 0.8, 1e-12);
  EXPECT_NEAR(o.probs.at("B"), 0.2, 1e-12);
  EXPECT_FALSE(o.debiased);
}

TEST(JudgePair, DebiasAveragesBothOrders) {
  // Forward (x in A): p(A)=0.8. Swapped (y in A): p(A)=0.6, so x (in B) gets 0.4.
  auto backend = slot_lookup_backend({{"Text X", 0.8}, {"Text Y", 0.6}});
  const auto t = canonical_template(TemplateKind::kSummarization);
  const auto o = judge_pair(two_item(), PairTask{"d0", "x", "y", 0}, instr(), t, *backend, true);
  EXPECT_NEAR(o.probs.at("A"), (0.8 + 0.4) / 2, 1e-12);
  EXPECT_NEAR(o.probs.at("B"), (0.2 + 0.6) / 2, 1e-12);
  EXPECT_TRUE(o.debiased);
}

TEST(JudgePair, DebiasedSwapIsAnExactMirror) {
  auto backend = slot_lookup_backend({{"Text X", 0.73}, {"Text Y", 0.41}});
  const auto t = canonical_template(TemplateKind::kSummarization);
  const auto fwd = judge_pair(two_item(), PairTask{"d0", "x", "y", 0}, instr(), t, *backend, true);
  const auto bwd = judge_pair(two_item(), PairTask{"d0", "y", "x", 0}, instr(), t, *backend, true);
  EXPECT_EQ(fwd.probs.at("A"), bwd.probs.at("B"));
  EXPECT_EQ(fwd.probs.at("B"), bwd.probs.at("A"));
}

TEST(JudgePair, PureSlotBiasBecomesATie) {
  auto backend = slot_lookup_backend({{"Text X", 0.9}, {"Text Y", 0.9}});
  const auto t = canonical_template(TemplateKind::kSummarization);
  const auto o = judge_pair(two_item(), PairTask{"d0", "x", "y", 0}, instr(), t, *backend, true);
  // Logprob round trips leave only rounding residue.
  EXPECT_NEAR(o.probs.at("A"), 0.5, 1e-15);
  EXPECT_NEAR(o.probs.at("B"), 0.5, 1e-15);
}

TEST(LabelProbabilities, VoteFallbackWhenLogprobsAreMissing) {
  int calls = 0;
  FunctionBackend backend("votes", [&](const ChatRequest& r) {
    ++calls;
    if (r.want_label_logprobs) return ChatResponse{"A", std::nullopt};
    EXPECT_GT(r.temperature, 0);
    return ChatResponse{r.seed % 4 == 0 ? "'B'." : "A", std::nullopt};
  });
  JudgeOptions opts;
  EXPECT_THROW(label_probabilities("ctx", backend, opts), CapabilityError);
  opts.fallback_votes = 8;
  const auto readout = label_probabilities("ctx", backend, opts);
  EXPECT_TRUE(readout.fallback_used);
  EXPECT_DOUBLE_EQ(readout.probs.at("A"), 6.0 / 8);
  EXPECT_DOUBLE_EQ(readout.probs.at("B"), 2.0 / 8);
}

TEST(Distribution, DecisionRatesSplitTies) {
  std::vector<PreferenceOutcome> outs;
  auto add = [&](double a) {
    outs.push_back(PreferenceOutcome{{"d", "x", "y", 0}, "i", {{"A", a}, {"B", 1 - a}}});
  };
  add(0.9);
  add(0.7);
  add(0.5);
  add(0.2);
  const auto d = distribution_from_outcomes("i", outs, {"A", "B"});
  EXPECT_DOUBLE_EQ(d.rates.at("A"), 2.5 / 4);
  EXPECT_DOUBLE_EQ(d.rates.at("B"), 1.5 / 4);
  EXPECT_EQ(d.n_pairs, 4u);
  EXPECT_THROW(distribution_from_outcomes("i", {}, {"A", "B"}), PreconditionError);
}

TEST(Distribution, RatesSumToOne) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PreferenceOutcome> outs;
    for (int k = 0; k < 1 + trial; ++k) {
      const double a = std::round(u(rng) * 4) / 4;  // frequent exact ties
      outs.push_back(PreferenceOutcome{{"d", "x", "y", 0}, "i", {{"A", a}, {"B", 1 - a}}});
    }
    const auto d = distribution_from_outcomes("i", outs, {"A", "B"});
    EXPECT_NEAR(d.rates.at("A") + d.rates.at("B"), 1.0, 1e-12);
  }
}

TEST(SamplePairs, DeterministicValidAndCoversUniverse) {
  auto ds = testing::small_dataset({1, 2, 3, 4});
  const auto view = ds.unlabeled();
  const auto a = sample_pairs(view, 400, 11);
  EXPECT_EQ(a, sample_pairs(view, 400, 11));
  EXPECT_NE(a, sample_pairs(view, 400, 12));
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_NE(a[k].first, a[k].second);
    EXPECT_EQ(a[k].seed_index, static_cast<std::int64_t>(k));
    seen.emplace(a[k].first, a[k].second);
  }
  EXPECT_EQ(seen.size(), 12u);
  EXPECT_THROW(sample_pairs(view, 0, 1), PreconditionError);
}

TEST(JudgePairs, ParallelMatchesSequential) {
  auto ds = testing::small_dataset({1, 2, 3, 4, 5});
  std::map<std::string, double> table;
  for (int i = 0; i < 5; ++i) table["Candidate text " + std::to_string(i)] = 0.1 + 0.15 * i;
  auto backend = slot_lookup_backend(table);
  const auto view = ds.unlabeled();
  const auto pairs = enumerate_pairs(view.items[0]);
  const auto t = canonical_template(TemplateKind::kSummarization);
  JudgeOptions seq, par;
  par.workers = 4;
  EXPECT_EQ(judge_pairs(view, pairs, instr(), t, *backend, true, seq),
            judge_pairs(view, pairs, instr(), t, *backend, true, par));
}

TEST(Outcome, JsonRoundTrip) {
  PreferenceOutcome o{{"d", "x", "y", 3}, "i", {{"A", 0.25}, {"B", 0.75}}, true, false};
  EXPECT_EQ(outcome_from_json(to_json(o)), o);
}

TEST(Pointwise, ArgmaxAndWeighted) {
  const std::array<double, 5> p{0.1, 0.2, 0.4, 0.2, 0.1};
  EXPECT_DOUBLE_EQ(pointwise_from_probs(p, PointwiseMode::kArgmax), 3);
  EXPECT_NEAR(pointwise_from_probs(p, PointwiseMode::kWeighted), 3.0, 1e-12);
  const std::array<double, 5> skew{0, 0, 0, 1, 3};
  EXPECT_NEAR(pointwise_from_probs(skew, PointwiseMode::kWeighted), (4 + 15) / 4.0, 1e-12);
  const std::array<double, 5> tie{0, 1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(pointwise_from_probs(tie, PointwiseMode::kArgmax), 2);
  EXPECT_THROW(pointwise_from_probs({0, 0, 0, 0, 0}, PointwiseMode::kWeighted), CapabilityError);
}

TEST(Pointwise, ReadsScoreTokensFromTopK) {
  FunctionBackend backend("pw", [](const ChatRequest&) {
    return ChatResponse{"4", std::map<std::string, double>{
                                 {"4", std::log(0.6)}, {"5", std::log(0.3)}, {"x", -1}}};
  });
  const auto item = two_item();
  EXPECT_NEAR(pointwise_score(item, item.candidates[0], instr(), backend,
                              PointwiseMode::kWeighted),
              (4 * 0.6 + 5 * 0.3) / 0.9, 1e-12);
  EXPECT_DOUBLE_EQ(
      pointwise_score(item, item.candidates[0], instr(), backend, PointwiseMode::kArgmax), 4);
  FunctionBackend none("none", [](const ChatRequest&) {
    return ChatResponse{"x", std::map<std::string, double>{{"x", -0.1}}};
  });
  EXPECT_THROW(
      pointwise_score(item, item.candidates[0], instr(), none, PointwiseMode::kArgmax),
      CapabilityError);
}

}  // namespace
}  // namespace fairjudge

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

// A simulated pairwise judge with planted biases, a simulated paraphraser,
// and synthetic datasets to run them on.
//
// The judge picks slot A with probability
//
//   sigmoid(s(I) * (gamma * (q_A - q_B) + beta + delta(I) + n(A, B)))
//
// where q is the planted quality of a candidate, beta a fixed position bias,
// delta(I) an instruction-dependent bias, s(I) an instruction-dependent
// sharpness (1 unless configured) and n an antisymmetric per-pair noise term
// (n(A, B) = -n(B, A)). Everything is a deterministic function of the
// parameters and the prompt text.

#ifndef FAIRJUDGE_SIMULATED_HPP_
#define FAIRJUDGE_SIMULATED_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairjudge/backend.hpp"
#include "fairjudge/metaeval.hpp"
#include "fairjudge/model.hpp"
#include "fairjudge/templates.hpp"

namespace fairjudge {

struct SimulatedEvaluatorParams {
  double quality_sensitivity = 1.0;  // gamma
  double position_bias = 0.0;        // beta, added to the slot-A logit
  /// delta(I) by exact instruction text.
  std::map<std::string, double> instruction_bias;
  /// Instructions not in the table get delta uniform in [-scale, scale],
  /// drawn from a hash of their text.
  double instruction_bias_scale = 0.0;
  /// s(I) by exact instruction text.
  std::map<std::string, double> instruction_sharpness;
  /// Instructions not in the table get s = exp(u), u uniform in [-spread, spread].
  double sharpness_spread = 0.0;
  double noise_scale = 0.0;
  std::uint64_t noise_seed = 0;

  double delta(std::string_view instruction) const;
  double sharpness(std::string_view instruction) const;
  /// Antisymmetric pair noise: noise(s, a, b) == -noise(s, b, a) exactly.
  double noise(std::string_view source, std::string_view a, std::string_view b) const;
  /// Logit of choosing slot A.
  double logit(double quality_a, double quality_b, std::string_view instruction,
               std::string_view source, std::string_view text_a,
               std::string_view text_b) const;
};

nlohmann::json to_json(const SimulatedEvaluatorParams& params);
SimulatedEvaluatorParams simulated_params_from_json(const nlohmann::json& j);

/// Planted per-candidate quality, keyed by (source text, candidate text).
/// Unknown texts (including "[N/A]") get the mean quality.
class SimulatedWorld {
 public:
  SimulatedWorld() = default;
  /// Plants the dataset's human scores for `aspect` as qualities.
  static SimulatedWorld from_dataset(const Dataset& dataset, const std::string& aspect);

  void set_quality(std::string_view source, std::string_view text, double quality);
  double quality(std::string_view source, std::string_view text) const;
  double mean_quality() const { return mean_; }
  /// Stable digest of the planted table.
  std::string fingerprint() const;

 private:
  static std::string key(std::string_view source, std::string_view text);
  std::map<std::string, double> quality_;
  double mean_ = 0;
};

/// Answers pairwise, content-free and pointwise prompts rendered from the
/// configured pairwise template and the canonical pointwise template.
class SimulatedJudgeBackend : public Backend {
 public:
  SimulatedJudgeBackend(SimulatedEvaluatorParams params, SimulatedWorld world,
                        PromptTemplate pairwise_template,
                        std::vector<std::string> verbalizer = {"A", "B"});

  std::string id() const override { return id_; }
  ChatResponse complete(const ChatRequest& request) override;

  const SimulatedEvaluatorParams& params() const { return params_; }

 private:
  ChatResponse pairwise(const std::map<std::string, std::string>& slots,
                        const ChatRequest& request) const;
  ChatResponse pointwise(const std::map<std::string, std::string>& slots,
                         const ChatRequest& request) const;

  SimulatedEvaluatorParams params_;
  SimulatedWorld world_;
  PromptTemplate pairwise_template_;
  PromptTemplate pointwise_template_;
  std::vector<std::string> verbalizer_;
  std::string id_;
};

/// Paraphrases by recombining phrase banks around the aspect keyword,
/// seeded by the request text, the request seed and `seed`.
class SimulatedParaphraserBackend : public Backend {
 public:
  explicit SimulatedParaphraserBackend(std::uint64_t seed = 0) : seed_(seed) {}

  std::string id() const override { return "simulated-paraphraser:" + std::to_string(seed_); }
  ChatResponse complete(const ChatRequest& request) override;

 private:
  std::uint64_t seed_;
};

/// Seed instruction in the style used for the pairwise summarization prompt.
std::string default_seed_instruction(const std::string& aspect);

struct SyntheticDatasetSpec {
  std::string name = "synthetic";
  std::size_t n_items = 10;
  std::size_t n_candidates = 16;
  std::vector<std::string> aspects{"coherence"};
  std::uint64_t seed = 0;
  double min_score = 1.0;
  double max_score = 5.0;
};

/// Items with unique texts and uniformly drawn human scores per aspect.
Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec);

/// Agreement of the simulated judge with the planted scores, computed
/// straight from the logit formula without rendering prompts. Mirrors
/// `agreement` for the kSingleOrder and kRoundRobin schedules.
double simulated_agreement_oracle(const SimulatedEvaluatorParams& params,
                                  const Dataset& dataset, const std::string& aspect,
                                  const std::string& instruction_text, bool debias = false,
                                  ComparisonSchedule schedule = ComparisonSchedule::kSingleOrder,
                                  std::uint64_t schedule_seed = 0);

}  // namespace fairjudge

#endif  // FAIRJUDGE_SIMULATED_HPP_

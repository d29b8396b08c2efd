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

// Greedy zero-shot instruction search: paraphrase the incumbent, score the
// candidates with an unsupervised objective on unlabeled pairs, keep the best.

#ifndef FAIRJUDGE_OPTIMIZER_HPP_
#define FAIRJUDGE_OPTIMIZER_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairjudge/backend.hpp"
#include "fairjudge/error.hpp"
#include "fairjudge/judge.hpp"
#include "fairjudge/metaeval.hpp"
#include "fairjudge/model.hpp"
#include "fairjudge/objectives.hpp"
#include "fairjudge/templates.hpp"

namespace fairjudge {

struct OptimizerConfig {
  int epochs = 5;
  int population = 5;
  /// 0 means one pair per ordered candidate pair in the dataset.
  std::size_t pairs_per_instruction = 0;
  ObjectiveKind objective = ObjectiveKind::kFairness;
  double paraphraser_temperature = 0.9;
  /// Keep the incumbent in every epoch's selection pool.
  bool elitism = true;
  std::uint64_t seed = 0;
  bool debias = false;
  /// Extra paraphrase attempts per candidate slot.
  int max_regenerations = 3;
  int paraphrase_max_tokens = 256;
  JudgeOptions judge;
};

void validate(const OptimizerConfig& config);
nlohmann::json to_json(const OptimizerConfig& config);

/// Pairs actually sampled per instruction for `dataset`.
std::size_t effective_pair_budget(const OptimizerConfig& config,
                                  const UnlabeledDataset& dataset);
/// Seed of the run's shared pair sample.
std::uint64_t pair_sample_seed(std::uint64_t seed);

struct ProposalOptions {
  double temperature = 0.9;
  std::uint64_t seed = 0;
  int epoch = 1;
  int max_regenerations = 3;
  int max_tokens = 256;
};

struct Proposal {
  std::vector<Instruction> candidates;
  std::vector<std::string> warnings;
};

/// `population` paraphrases of `incumbent`, each non-empty and containing
/// `aspect` (case-insensitively). Rejected outputs are regenerated; copies of
/// the incumbent are accepted with a warning once the retry budget is spent.
/// Throws OptimizationError if a slot cannot be filled.
Proposal propose_candidates(const Instruction& incumbent, int population,
                            Backend& paraphraser, const std::string& aspect,
                            const ProposalOptions& options = {});

struct ScoredCandidate {
  Instruction instruction;
  ObjectiveScore score;
  PreferenceDistribution distribution;
};

struct EpochRecord {
  int epoch = 0;
  std::vector<ScoredCandidate> candidates;
  std::string incumbent_id;
  double incumbent_value = 0;
  std::vector<std::string> warnings;
};

struct OptimizationTrace {
  std::vector<EpochRecord> epochs;
  std::optional<ScoredCandidate> best;
  std::uint64_t pair_seed = 0;
  std::size_t n_pairs = 0;
  /// Epochs restored from an existing trace file.
  int resumed_epochs = 0;

  const ScoredCandidate& find(const std::string& instruction_id) const;
  const ScoredCandidate& initial() const;
};

/// Where the line-delimited trace goes. With `resume`, complete epochs in an
/// existing file are reused and anything after the last one is discarded.
struct TraceOptions {
  std::filesystem::path path;
  bool resume = false;
};

/// Thrown when a backend fails mid-run; the trace so far is attached (and
/// already persisted when a trace file is in use).
class PartialTraceError : public OptimizationError {
 public:
  PartialTraceError(const std::string& what, ExitCode code, OptimizationTrace partial)
      : OptimizationError(what, code), partial_(std::move(partial)) {}
  const OptimizationTrace& partial() const { return partial_; }

 private:
  OptimizationTrace partial_;
};

/// Runs the search. Epoch 0 scores `seed_instruction`; each later epoch
/// proposes `population` paraphrases of the incumbent. All instructions are
/// scored on one pair sample drawn from config.seed. Ties go to the earlier
/// epoch, then the lower candidate index.
OptimizationTrace optimize(const Instruction& seed_instruction, const UnlabeledDataset& dataset,
                           const OptimizerConfig& config, Backend& evaluator,
                           Backend& paraphraser, const PromptTemplate& tmpl,
                           const std::optional<TraceOptions>& trace_options = std::nullopt);

/// Reads the complete epochs of a trace file.
OptimizationTrace read_trace(const std::filesystem::path& path);

nlohmann::json to_json(const ScoredCandidate& candidate);
nlohmann::json summary_json(const OptimizationTrace& trace);

struct ObjectiveRow {
  std::string instruction_id;
  std::map<ObjectiveKind, double> scores;
  double p_first = 0;
  double rho = 0;
};

struct ObjectiveCorrelation {
  ObjectiveKind kind;
  /// Spearman correlation between the objective and agreement across
  /// instructions, when defined.
  std::optional<double> rho;
  /// "ok", "insufficient points" or "undefined".
  std::string status;
};

struct ObjectiveComparison {
  std::vector<ObjectiveRow> rows;
  std::vector<ObjectiveCorrelation> correlations;
  bool debiased = false;

  bool insufficient_points() const { return rows.size() < 2; }
};

nlohmann::json to_json(const ObjectiveComparison& comparison);
void write_table(std::ostream& out, const ObjectiveComparison& comparison);

/// Analysis path: needs human scores. Scores every instruction under each
/// kind on `pairs`, measures its agreement, and correlates the two.
ObjectiveComparison compare_objectives(const std::vector<Instruction>& instructions,
                                       const Dataset& dataset, const std::string& aspect,
                                       Backend& backend, const PromptTemplate& tmpl,
                                       const std::vector<PairTask>& pairs,
                                       const std::vector<ObjectiveKind>& kinds, bool debias,
                                       const AgreementOptions& options = {});

}  // namespace fairjudge

#endif  // FAIRJUDGE_OPTIMIZER_HPP_

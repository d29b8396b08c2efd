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

// Meta-evaluation: how well an instruction's judgments agree with humans.

#ifndef FAIRJUDGE_METAEVAL_HPP_
#define FAIRJUDGE_METAEVAL_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairjudge/judge.hpp"

namespace fairjudge {

/// Ranks 1..n with tied values sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman's rho with average ranks for ties. Throws UndefinedStatisticError
/// on length mismatch, fewer than two points, or a constant side.
double spearman(std::span<const double> x, std::span<const double> y);

/// Per-candidate (wins + 0.5 * ties) / comparisons over one item's outcomes.
/// Label verbalizer[0] means pair.first won. Throws AggregationError listing
/// candidates that appear in no outcome.
std::map<std::string, double> aggregate_winrates(
    const ItemContent& item, const std::vector<PreferenceOutcome>& outcomes,
    const std::vector<std::string>& verbalizer = {"A", "B"});

/// p(a beats b) as judged by some comparator.
using PairwiseJudge = std::function<double(const std::string& a, const std::string& b)>;

/// Best-first order by stable merge sort, using `judge` as the comparator
/// (a precedes b iff judge(a, b) > 0.5). Makes O(n log n) judge calls and
/// keeps input order between candidates the judge cannot separate.
std::vector<std::string> rank_by_comparison(const std::vector<std::string>& candidates,
                                            const PairwiseJudge& judge,
                                            std::size_t* comparisons = nullptr);

enum class ComparisonSchedule {
  /// Every unordered pair judged once, slot order drawn from the schedule seed.
  kSingleOrder,
  /// Every ordered pair judged.
  kRoundRobin,
  /// Merge sort with the (always debiased) judge as comparator.
  kSort,
};

std::string to_string(ComparisonSchedule schedule);
ComparisonSchedule comparison_schedule_from_string(std::string_view name);

/// The pairs judged for one item under `schedule` (not used for kSort).
std::vector<PairTask> comparison_pairs(const ItemContent& item, ComparisonSchedule schedule,
                                       std::uint64_t seed);

struct AgreementOptions {
  ComparisonSchedule schedule = ComparisonSchedule::kSingleOrder;
  std::uint64_t schedule_seed = 0;
  JudgeOptions judge;
};

struct AgreementReport {
  std::string instruction_id;
  std::string aspect;
  double spearman_rho = 0;
  std::size_t n_items = 0;
  /// Items dropped because their human scores are constant.
  std::size_t n_skipped = 0;
  bool debiased = false;
};

nlohmann::json to_json(const AgreementReport& report);

/// Mean over items of spearman(judge scores, human scores). Items with
/// constant human scores are skipped; an item whose judge scores are constant
/// contributes 0. Throws PreconditionError if scores for `aspect` are missing.
AgreementReport agreement(const Instruction& instruction, const Dataset& dataset,
                          const std::string& aspect, Backend& backend,
                          const PromptTemplate& tmpl, bool debias,
                          const AgreementOptions& options = {});

/// Same as `agreement` but over pre-computed per-item judge scores.
AgreementReport agreement_from_scores(const std::string& instruction_id,
                                      const Dataset& dataset, const std::string& aspect,
                                      const std::map<std::string, std::map<std::string, double>>&
                                          judge_scores,
                                      bool debiased);

struct QuadraticFit {
  double a = 0, b = 0, c = 0;
  double r2 = 0;
  /// -b / (2a), reported only when a < 0.
  std::optional<double> vertex;
};

/// Least-squares fit y ~ a x^2 + b x + c. Nullopt when fewer than three
/// distinct x values make the system rank-deficient.
std::optional<QuadraticFit> fit_quadratic(std::span<const double> x, std::span<const double> y);

struct SensitivityPoint {
  std::string instruction_id;
  double p_first = 0;  // decision rate of verbalizer[0]
  double rho = 0;
};

struct SensitivityReport {
  std::vector<SensitivityPoint> points;
  std::optional<QuadraticFit> fit;
  /// Set when a fit was attempted on >=3 points but the x values were degenerate.
  bool degenerate = false;
  bool debiased = false;
};

nlohmann::json to_json(const SensitivityReport& report);
/// Two-column "p_I<TAB>rho" plot data, one line per point.
void write_plot_data(std::ostream& out, const SensitivityReport& report);
void write_table(std::ostream& out, const SensitivityReport& report);

SensitivityReport fit_sensitivity(std::vector<SensitivityPoint> points, bool debiased);

/// p_I over `pairs` and agreement for each instruction, then the quadratic fit.
SensitivityReport sensitivity_report(const std::vector<Instruction>& instructions,
                                     const Dataset& dataset, const std::string& aspect,
                                     const std::vector<PairTask>& pairs, Backend& backend,
                                     const PromptTemplate& tmpl, bool debias,
                                     const AgreementOptions& options = {});

}  // namespace fairjudge

#endif  // FAIRJUDGE_METAEVAL_HPP_

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

#include "fairjudge/metaeval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include <Eigen/Dense>

#include "fairjudge/error.hpp"
#include "fairjudge/util.hpp"

namespace fairjudge {

using json = nlohmann::json;

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share ranks i+1..j.
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw UndefinedStatisticError("spearman: length mismatch (" + std::to_string(x.size()) +
                                  " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw UndefinedStatisticError("spearman: fewer than two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  // Average ranks always have mean (n + 1) / 2.
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) {
    throw UndefinedStatisticError("spearman: constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::map<std::string, double> aggregate_winrates(
    const ItemContent& item, const std::vector<PreferenceOutcome>& outcomes,
    const std::vector<std::string>& verbalizer) {
  if (verbalizer.size() != 2) {
    throw PreconditionError("winrate aggregation needs exactly two labels");
  }
  std::map<std::string, double> wins;
  std::map<std::string, int> comparisons;
  for (const auto& o : outcomes) {
    if (o.pair.item_id != item.id) continue;
    const double pa = o.probs.at(verbalizer[0]);
    const double pb = o.probs.at(verbalizer[1]);
    const double first_share = pa > pb ? 1.0 : (pa < pb ? 0.0 : 0.5);
    wins[o.pair.first] += first_share;
    wins[o.pair.second] += 1.0 - first_share;
    ++comparisons[o.pair.first];
    ++comparisons[o.pair.second];
  }
  std::string missing;
  std::map<std::string, double> rates;
  for (const auto& c : item.candidates) {
    auto it = comparisons.find(c.id);
    if (it == comparisons.end()) {
      missing += (missing.empty() ? "" : ", ") + c.id;
      continue;
    }
    rates[c.id] = wins[c.id] / static_cast<double>(it->second);
  }
  if (!missing.empty()) {
    throw AggregationError("item '" + item.id + "': no comparisons for " + missing);
  }
  return rates;
}

namespace {

void merge_sort(std::vector<std::string>& v, std::size_t lo, std::size_t hi,
                const PairwiseJudge& judge, std::size_t& count,
                std::vector<std::string>& scratch) {
  if (hi - lo < 2) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  merge_sort(v, lo, mid, judge, count, scratch);
  merge_sort(v, mid, hi, judge, count, scratch);
  scratch.clear();
  std::size_t i = lo, j = mid;
  while (i < mid && j < hi) {
    ++count;
    // Right element moves ahead only if it strictly beats the left one.
    if (judge(v[j], v[i]) > 0.5) {
      scratch.push_back(v[j++]);
    } else {
      scratch.push_back(v[i++]);
    }
  }
  while (i < mid) scratch.push_back(v[i++]);
  while (j < hi) scratch.push_back(v[j++]);
  std::copy(scratch.begin(), scratch.end(), v.begin() + static_cast<std::ptrdiff_t>(lo));
}

}  // namespace

std::vector<std::string> rank_by_comparison(const std::vector<std::string>& candidates,
                                            const PairwiseJudge& judge,
                                            std::size_t* comparisons) {
  if (candidates.size() < 2) {
    throw PreconditionError("rank_by_comparison needs at least two candidates");
  }
  std::vector<std::string> order = candidates;
  std::vector<std::string> scratch;
  std::size_t count = 0;
  merge_sort(order, 0, order.size(), judge, count, scratch);
  if (comparisons) *comparisons = count;
  return order;
}

std::string to_string(ComparisonSchedule schedule) {
  switch (schedule) {
    case ComparisonSchedule::kSingleOrder: return "single_order";
    case ComparisonSchedule::kRoundRobin: return "round_robin";
    case ComparisonSchedule::kSort: return "sort";
  }
  return "unknown";
}

ComparisonSchedule comparison_schedule_from_string(std::string_view name) {
  if (name == "single_order") return ComparisonSchedule::kSingleOrder;
  if (name == "round_robin") return ComparisonSchedule::kRoundRobin;
  if (name == "sort") return ComparisonSchedule::kSort;
  throw ValidationError("unknown comparison schedule '" + std::string(name) + "'");
}

std::vector<PairTask> comparison_pairs(const ItemContent& item, ComparisonSchedule schedule,
                                       std::uint64_t seed) {
  if (schedule == ComparisonSchedule::kRoundRobin) return enumerate_pairs(item);
  if (schedule == ComparisonSchedule::kSort) {
    throw PreconditionError("the sort schedule chooses its pairs adaptively");
  }
  std::vector<PairTask> pairs;
  const auto& cands = item.candidates;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      std::uint64_t h = fnv1a64(item.id, splitmix64(seed));
      h = fnv1a64(cands[i].id, h ^ 0x1f);
      h = fnv1a64(cands[j].id, h ^ 0x2f);
      const bool flip = (splitmix64(h) >> 63) != 0;
      const auto& a = flip ? cands[j] : cands[i];
      const auto& b = flip ? cands[i] : cands[j];
      pairs.push_back(PairTask{item.id, a.id, b.id, static_cast<std::int64_t>(pairs.size())});
    }
  }
  return pairs;
}

nlohmann::json to_json(const AgreementReport& report) {
  return json{{"instruction_id", report.instruction_id},
              {"aspect", report.aspect},
              {"spearman_rho", report.spearman_rho},
              {"n_items", report.n_items},
              {"n_skipped", report.n_skipped},
              {"debiased", report.debiased}};
}

AgreementReport agreement_from_scores(
    const std::string& instruction_id, const Dataset& dataset, const std::string& aspect,
    const std::map<std::string, std::map<std::string, double>>& judge_scores, bool debiased) {
  AgreementReport report{instruction_id, aspect, 0.0, 0, 0, debiased};
  double total = 0;
  for (const auto& item : dataset.items) {
    const auto& human = item.aspect_scores.at(aspect);
    const auto& judged = judge_scores.at(item.id());
    std::vector<double> h, s;
    for (const auto& c : item.content.candidates) {
      h.push_back(human.at(c.id));
      s.push_back(judged.at(c.id));
    }
    const bool human_constant =
        std::all_of(h.begin(), h.end(), [&](double v) { return v == h.front(); });
    if (human_constant) {
      ++report.n_skipped;
      continue;
    }
    const bool judge_constant =
        std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
    total += judge_constant ? 0.0 : spearman(s, h);
    ++report.n_items;
  }
  if (report.n_items == 0) {
    throw UndefinedStatisticError("agreement: no item has varying human scores for '" +
                                  aspect + "'");
  }
  report.spearman_rho = total / static_cast<double>(report.n_items);
  return report;
}

AgreementReport agreement(const Instruction& instruction, const Dataset& dataset,
                          const std::string& aspect, Backend& backend,
                          const PromptTemplate& tmpl, bool debias,
                          const AgreementOptions& options) {
  if (!dataset.has_scores(aspect)) {
    throw PreconditionError("agreement: dataset '" + dataset.name +
                            "' lacks human scores for aspect '" + aspect + "'");
  }
  const auto& verbalizer = options.judge.verbalizer;
  std::map<std::string, std::map<std::string, double>> judge_scores;

  if (options.schedule == ComparisonSchedule::kSort) {
    for (const auto& item : dataset.items) {
      const auto& content = item.content;
      std::vector<std::string> ids;
      for (const auto& c : content.candidates) ids.push_back(c.id);
      auto judge = [&](const std::string& a, const std::string& b) {
        const auto outcome = judge_pair(content, PairTask{content.id, a, b, 0}, instruction,
                                        tmpl, backend, debias, options.judge);
        return outcome.probs.at(verbalizer[0]);
      };
      const auto order = rank_by_comparison(ids, judge);
      auto& scores = judge_scores[content.id];
      for (std::size_t r = 0; r < order.size(); ++r) {
        scores[order[r]] = static_cast<double>(order.size() - r);
      }
    }
  } else {
    std::vector<PairTask> all_pairs;
    for (const auto& item : dataset.items) {
      auto pairs = comparison_pairs(item.content, options.schedule, options.schedule_seed);
      all_pairs.insert(all_pairs.end(), pairs.begin(), pairs.end());
    }
    const auto unlabeled = dataset.unlabeled();
    const auto outcomes = judge_pairs(unlabeled, all_pairs, instruction, tmpl, backend,
                                      debias, options.judge);
    for (const auto& item : dataset.items) {
      judge_scores[item.id()] = aggregate_winrates(item.content, outcomes, verbalizer);
    }
  }
  return agreement_from_scores(instruction.id, dataset, aspect, judge_scores, debias);
}

std::optional<QuadraticFit> fit_quadratic(std::span<const double> x,
                                          std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("fit_quadratic: length mismatch");
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < 3) return std::nullopt;
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    design(i, 0) = xi * xi;
    design(i, 1) = xi;
    design(i, 2) = 1.0;
    target(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) return std::nullopt;
  const Eigen::Vector3d coef = qr.solve(target);

  QuadraticFit fit{coef(0), coef(1), coef(2), 0.0, std::nullopt};
  const double mean = target.mean();
  double ss_res = 0, ss_tot = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    const double pred = fit.a * xi * xi + fit.b * xi + fit.c;
    ss_res += (target(i) - pred) * (target(i) - pred);
    ss_tot += (target(i) - mean) * (target(i) - mean);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : 0.0);
  if (fit.a < 0) fit.vertex = -fit.b / (2.0 * fit.a);
  return fit;
}

nlohmann::json to_json(const SensitivityReport& report) {
  json points = json::array();
  for (const auto& p : report.points) {
    points.push_back({{"instruction_id", p.instruction_id}, {"p_I", p.p_first}, {"rho", p.rho}});
  }
  json j{{"points", std::move(points)},
         {"debiased", report.debiased},
         {"degenerate", report.degenerate}};
  if (report.fit) {
    j["fit"] = {{"a", report.fit->a}, {"b", report.fit->b}, {"c", report.fit->c},
                {"r2", report.fit->r2}};
    j["fit"]["vertex"] = report.fit->vertex ? json(*report.fit->vertex) : json();
  } else {
    j["fit"] = nullptr;
  }
  return j;
}

void write_plot_data(std::ostream& out, const SensitivityReport& report) {
  out << "p_I\trho\n";
  for (const auto& p : report.points) {
    out << std::setprecision(17) << p.p_first << '\t' << p.rho << '\n';
  }
}

void write_table(std::ostream& out, const SensitivityReport& report) {
  out << (report.debiased ? "debiased" : "raw") << " judgments\n";
  out << std::left << std::setw(24) << "instruction" << std::setw(12) << "p_I"
      << "rho\n";
  for (const auto& p : report.points) {
    out << std::left << std::setw(24) << p.instruction_id << std::setw(12) << std::fixed
        << std::setprecision(4) << p.p_first << p.rho << '\n';
  }
  out.unsetf(std::ios::fixed);
  if (report.fit) {
    out << std::setprecision(6) << "fit: rho = " << report.fit->a << " p^2 + " << report.fit->b
        << " p + " << report.fit->c << "  (r2 = " << report.fit->r2 << ")\n";
    if (report.fit->vertex) {
      out << "vertex: p* = " << *report.fit->vertex << '\n';
    } else {
      out << "vertex: none (fit is not concave)\n";
    }
  } else if (report.degenerate) {
    out << "fit: degenerate (p_I values do not span three distinct points)\n";
  } else {
    out << "fit: skipped (fewer than 3 points)\n";
  }
}

SensitivityReport fit_sensitivity(std::vector<SensitivityPoint> points, bool debiased) {
  SensitivityReport report;
  report.points = std::move(points);
  report.debiased = debiased;
  if (report.points.size() >= 3) {
    std::vector<double> x, y;
    for (const auto& p : report.points) {
      x.push_back(p.p_first);
      y.push_back(p.rho);
    }
    report.fit = fit_quadratic(x, y);
    report.degenerate = !report.fit.has_value();
  }
  return report;
}

SensitivityReport sensitivity_report(const std::vector<Instruction>& instructions,
                                     const Dataset& dataset, const std::string& aspect,
                                     const std::vector<PairTask>& pairs, Backend& backend,
                                     const PromptTemplate& tmpl, bool debias,
                                     const AgreementOptions& options) {
  if (!dataset.has_scores(aspect)) {
    throw PreconditionError("sensitivity: dataset lacks human scores for '" + aspect + "'");
  }
  const auto unlabeled = dataset.unlabeled();
  std::vector<SensitivityPoint> points;
  for (const auto& instruction : instructions) {
    const auto sample = preference_distribution(instruction, pairs, unlabeled, tmpl, backend,
                                                debias, options.judge);
    const auto report = agreement(instruction, dataset, aspect, backend, tmpl, debias, options);
    points.push_back(SensitivityPoint{
        instruction.id, sample.distribution.rates.at(options.judge.verbalizer[0]),
        report.spearman_rho});
  }
  return fit_sensitivity(std::move(points), debias);
}

}  // namespace fairjudge

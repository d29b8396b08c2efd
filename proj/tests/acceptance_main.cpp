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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fairjudge/cli.hpp"
#include "fairjudge/judge.hpp"
#include "fairjudge/metaeval.hpp"
#include "fairjudge/objectives.hpp"
#include "fairjudge/optimizer.hpp"
#include "fairjudge/simulated.hpp"

namespace fj = fairjudge;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Tolerances and thresholds.
constexpr double kFairnessTol = 1e-12;
constexpr double kSpearmanTol = 1e-12;
constexpr int kRandomTiedVectors = 1000;
constexpr std::size_t kDebiasPairs = 1000;
constexpr double kRawFirstMin = 0.85;
constexpr double kDebiasedLo = 0.45, kDebiasedHi = 0.55;
constexpr double kSpanLo = 0.2, kSpanHi = 0.8;
constexpr double kVertexLo = 0.45, kVertexHi = 0.55;
constexpr double kMinR2 = 0.9;
constexpr int kSeeds = 20;
constexpr double kSeedGapMin = 0.25;
constexpr int kRhoWinsMin = 18;

constexpr double kPositionBias = 0.5;
constexpr double kSweep = 1.75;
const std::string kAspect = "coherence";

struct Result {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// ---- criterion 2 oracle: ranks by counting, Pearson from raw sums ----

std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) less += 1;
      if (w == v[i]) equal += 1;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = counting_ranks(x), ry = counting_ranks(y);
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
    sxy += rx[i] * ry[i];
  }
  const double cov = sxy - sx * sy / n;
  return cov / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
}

// ---- shared simulation setup ----

fj::SimulatedEvaluatorParams family_params(std::uint64_t noise_seed) {
  fj::SimulatedEvaluatorParams p;
  p.quality_sensitivity = 1.0;
  p.position_bias = kPositionBias;
  p.noise_scale = 0.5;
  p.noise_seed = noise_seed;
  p.sharpness_spread = 1.0;
  return p;
}

fj::Dataset family_dataset(std::uint64_t seed) {
  fj::SyntheticDatasetSpec spec;
  spec.name = "synthetic-" + std::to_string(seed);
  spec.seed = seed;
  return fj::make_synthetic_dataset(spec);
}

// Instructions whose planted bias sweeps the effective slot-A bias over
// [-kSweep, kSweep].
std::vector<fj::Instruction> sweep_family(fj::SimulatedEvaluatorParams& params, int n) {
  std::vector<fj::Instruction> out;
  for (int k = 0; k < n; ++k) {
    const double effective = -kSweep + 2 * kSweep * k / (n - 1);
    fj::Instruction ins{"sweep-" + std::to_string(k),
                        "Variant " + std::to_string(k) + ": judge the " + kAspect +
                            " of the two summaries. Answer 'A' or 'B'.",
                        kAspect, std::nullopt, 0};
    params.instruction_bias[ins.text] = effective - kPositionBias;
    out.push_back(ins);
  }
  return out;
}

double first_rate(const fj::PreferenceDistribution& d) { return d.rates.at("A"); }

// ---- criteria ----

Result criterion1() {
  auto dist = [](double a, double b) {
    return fj::PreferenceDistribution{"x", {{"A", a}, {"B", b}}, 1};
  };
  const double f1 = fj::fairness(dist(0.5, 0.5));
  const double f2 = fj::fairness(dist(1.0, 0.0));
  const double f3 = fj::fairness(dist(0.788, 0.212));
  const bool ok = std::abs(f1) <= kFairnessTol && std::abs(f2 + 0.5) <= kFairnessTol &&
                  std::abs(f3 + 0.288) <= kFairnessTol;
  return {ok, "f(.5,.5)=" + fmt(f1, 15) + " f(1,0)=" + fmt(f2, 15) +
                  " f(.788,.212)=" + fmt(f3, 15)};
}

Result criterion2() {
  double worst = 0;
  std::size_t cases = 0;
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> x(n), y(n);
    std::iota(x.begin(), x.end(), 1.0);
    std::iota(y.begin(), y.end(), 1.0);
    do {
      worst = std::max(worst, std::abs(fj::spearman(x, y) - brute_spearman(x, y)));
      ++cases;
    } while (std::next_permutation(y.begin(), y.end()));
  }
  std::mt19937_64 rng(12345);
  int made = 0;
  while (made < kRandomTiedVectors) {
    const int n = 2 + static_cast<int>(rng() % 19);
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = static_cast<double>(rng() % 4);
    for (auto& v : y) v = static_cast<double>(rng() % 5);
    auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double w) { return w == v[0]; });
    };
    if (constant(x) || constant(y)) continue;
    worst = std::max(worst, std::abs(fj::spearman(x, y) - brute_spearman(x, y)));
    ++made;
    ++cases;
  }
  return {worst <= kSpearmanTol,
          std::to_string(cases) + " cases, max |diff|=" + fmt_sci(worst)};
}

Result criterion3() {
  fj::SimulatedEvaluatorParams p;
  p.quality_sensitivity = 0.0;
  p.position_bias = 2.0;
  const auto ds = family_dataset(3);
  fj::SimulatedJudgeBackend judge(p, fj::SimulatedWorld::from_dataset(ds, kAspect),
                                  fj::canonical_template(fj::TemplateKind::kSummarization));
  const auto unlabeled = ds.unlabeled();
  const auto pairs = fj::sample_pairs(unlabeled, kDebiasPairs, 3);
  const auto tmpl = fj::canonical_template(fj::TemplateKind::kSummarization);
  const auto seed = ds.aspect(kAspect).seed_instruction;
  const double raw =
      first_rate(fj::preference_distribution(seed, pairs, unlabeled, tmpl, judge, false)
                     .distribution);
  const double deb =
      first_rate(fj::preference_distribution(seed, pairs, unlabeled, tmpl, judge, true)
                     .distribution);
  return {raw >= kRawFirstMin && deb >= kDebiasedLo && deb <= kDebiasedHi,
          "raw p_A=" + fmt(raw) + " debiased p_A=" + fmt(deb)};
}

struct Family {
  fj::Dataset dataset;
  fj::SimulatedEvaluatorParams params;
  std::vector<fj::Instruction> instructions;
  std::vector<fj::PairTask> pairs;
};

Family make_family() {
  Family f;
  f.dataset = family_dataset(4);
  f.params = family_params(4);
  f.instructions = sweep_family(f.params, 21);
  f.pairs = fj::sample_pairs(f.dataset.unlabeled(), f.dataset.ordered_pair_count(), 4);
  return f;
}

Result criterion4(const Family& f) {
  fj::SimulatedJudgeBackend judge(f.params, fj::SimulatedWorld::from_dataset(f.dataset, kAspect),
                                  fj::canonical_template(fj::TemplateKind::kSummarization));
  const auto report = fj::sensitivity_report(
      f.instructions, f.dataset, kAspect, f.pairs, judge,
      fj::canonical_template(fj::TemplateKind::kSummarization), false);
  double lo = 1, hi = 0;
  for (const auto& p : report.points) {
    lo = std::min(lo, p.p_first);
    hi = std::max(hi, p.p_first);
  }
  if (!report.fit) return {false, "no quadratic fit"};
  const auto& fit = *report.fit;
  const bool span = lo <= kSpanLo && hi >= kSpanHi;
  const bool ok = span && fit.a < 0 && fit.vertex && *fit.vertex >= kVertexLo &&
                  *fit.vertex <= kVertexHi && fit.r2 >= kMinR2;
  return {ok, "p_I in [" + fmt(lo, 3) + ", " + fmt(hi, 3) + "], a=" + fmt(fit.a) +
                  " vertex=" + (fit.vertex ? fmt(*fit.vertex) : std::string("none")) +
                  " r2=" + fmt(fit.r2)};
}

Result criterion6(const Family& f) {
  fj::SimulatedJudgeBackend judge(f.params, fj::SimulatedWorld::from_dataset(f.dataset, kAspect),
                                  fj::canonical_template(fj::TemplateKind::kSummarization));
  const auto cmp = fj::compare_objectives(
      f.instructions, f.dataset, kAspect, judge,
      fj::canonical_template(fj::TemplateKind::kSummarization), f.pairs,
      fj::all_objective_kinds(), false);
  std::vector<std::pair<double, fj::ObjectiveKind>> mags;
  std::string detail;
  for (const auto& c : cmp.correlations) {
    const double m = c.rho ? std::abs(*c.rho) : 0.0;
    mags.emplace_back(m, c.kind);
    detail += fj::to_string(c.kind) + "=" + (c.rho ? fmt(*c.rho, 3) : c.status) + " ";
  }
  std::sort(mags.begin(), mags.end(), [](auto& a, auto& b) { return a.first > b.first; });
  const bool ok = mags.front().second == fj::ObjectiveKind::kFairness &&
                  mags.front().first > mags[1].first &&
                  mags.back().second == fj::ObjectiveKind::kConfidence &&
                  mags.back().first < mags[mags.size() - 2].first;
  return {ok, "corr with rho: " + detail};
}

struct SeedRun {
  double initial_gap, final_gap;
  double initial_rho, final_rho;
  double debias_only_rho, both_rho;
};

fj::SimulatedEvaluatorParams zepo_params(std::uint64_t seed, const std::string& seed_text) {
  fj::SimulatedEvaluatorParams p = family_params(seed);
  p.instruction_bias_scale = 1.5;
  p.instruction_bias[seed_text] = 1.0;  // effective slot-A bias 1.5
  return p;
}

struct SeedSetup {
  fj::Dataset ds;
  fj::PromptTemplate tmpl = fj::canonical_template(fj::TemplateKind::kSummarization);
  fj::Instruction seed_ins;
  std::unique_ptr<fj::SimulatedJudgeBackend> judge;
  fj::SimulatedParaphraserBackend paraphraser;
  fj::OptimizerConfig cfg;
  fj::AgreementOptions ag;

  explicit SeedSetup(std::uint64_t seed) : ds(family_dataset(100 + seed)), paraphraser(seed) {
    seed_ins = ds.aspect(kAspect).seed_instruction;
    judge = std::make_unique<fj::SimulatedJudgeBackend>(
        zepo_params(seed, seed_ins.text), fj::SimulatedWorld::from_dataset(ds, kAspect), tmpl);
    cfg.seed = seed;
    ag.schedule_seed = seed;
  }
  double rho(const fj::Instruction& ins, bool debias) {
    return fj::agreement(ins, ds, kAspect, *judge, tmpl, debias, ag).spearman_rho;
  }
};

void zepo_seed(std::uint64_t seed, SeedRun& r) {
  SeedSetup s(seed);
  const auto trace = fj::optimize(s.seed_ins, s.ds.unlabeled(), s.cfg, *s.judge, s.paraphraser,
                                  s.tmpl);
  r.initial_gap = std::abs(first_rate(trace.initial().distribution) - 0.5);
  r.final_gap = std::abs(first_rate(trace.best->distribution) - 0.5);
  r.initial_rho = s.rho(s.seed_ins, false);
  r.final_rho = s.rho(trace.best->instruction, false);
}

void debias_seed(std::uint64_t seed, SeedRun& r) {
  SeedSetup s(seed);
  r.debias_only_rho = s.rho(s.seed_ins, true);
  s.cfg.debias = true;
  const auto trace = fj::optimize(s.seed_ins, s.ds.unlabeled(), s.cfg, *s.judge, s.paraphraser,
                                  s.tmpl);
  r.both_rho = s.rho(trace.best->instruction, true);
}

Result criterion5(const std::vector<SeedRun>& runs) {
  int fairer = 0, better = 0;
  double min_initial_gap = 1;
  for (const auto& r : runs) {
    fairer += r.final_gap <= r.initial_gap;
    better += r.final_rho >= r.initial_rho;
    min_initial_gap = std::min(min_initial_gap, r.initial_gap);
  }
  const bool ok = min_initial_gap >= kSeedGapMin && fairer == kSeeds && better >= kRhoWinsMin;
  return {ok, "min initial |p_I-0.5|=" + fmt(min_initial_gap, 3) + ", fairer " +
                  std::to_string(fairer) + "/" + std::to_string(kSeeds) + ", rho up " +
                  std::to_string(better) + "/" + std::to_string(kSeeds)};
}

Result criterion7(const std::vector<SeedRun>& runs) {
  double zepo = 0, debias = 0, both = 0;
  for (const auto& r : runs) {
    zepo += r.final_rho;
    debias += r.debias_only_rho;
    both += r.both_rho;
  }
  const double n = static_cast<double>(runs.size());
  zepo /= n;
  debias /= n;
  both /= n;
  return {both >= zepo && both >= debias, "mean rho: zepo=" + fmt(zepo) + " debias=" +
                                              fmt(debias) + " both=" + fmt(both)};
}

// Writes a dataset plus a simulated-backend config into `dir`.
fs::path write_cli_fixture(const fs::path& dir) {
  fs::create_directories(dir);
  fj::save_dataset(family_dataset(8), dir / "data.json");
  json cfg{{"dataset", "data.json"},
           {"aspect", kAspect},
           {"seed", 8},
           {"evaluator",
            {{"kind", "simulated"},
             {"quality_sensitivity", 1.0},
             {"position_bias", kPositionBias},
             {"noise_scale", 0.5},
             {"noise_seed", 8},
             {"instruction_bias", {{"scale", 1.5}}}}},
           {"paraphraser", {{"kind", "simulated"}, {"seed", 8}}},
           {"optimizer", {{"epochs", 5}, {"population", 5}}}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  return dir / "config.json";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path only_trace(const fs::path& dir) {
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().string().ends_with(".trace.jsonl")) return e.path();
  }
  return {};
}

Result criterion8(const fs::path& work) {
  const auto config = write_cli_fixture(work / "c8");
  std::ostringstream out, err;
  const int a = fj::run_cli({"optimize", "--config", config.string(), "--out",
                             (work / "c8" / "run1").string()},
                            out, err);
  const int b = fj::run_cli({"optimize", "--config", config.string(), "--out",
                             (work / "c8" / "run2").string()},
                            out, err);
  if (a != 0 || b != 0) return {false, "exit codes " + std::to_string(a) + "/" +
                                           std::to_string(b) + ": " + err.str()};
  const auto t1 = only_trace(work / "c8" / "run1"), t2 = only_trace(work / "c8" / "run2");
  const auto s1 = slurp(t1), s2 = slurp(t2);
  const auto lines = std::count(s1.begin(), s1.end(), '\n');
  return {!s1.empty() && s1 == s2, std::to_string(s1.size()) + " bytes, " +
                                       std::to_string(lines) + " records, identical=" +
                                       (s1 == s2 ? "yes" : "no")};
}

Result criterion9(const fs::path& work) {
  const auto clean = family_dataset(9);
  fj::Dataset poisoned = clean;
  for (auto& item : poisoned.items) {
    for (auto& [aspect, scores] : item.aspect_scores) {
      for (auto& [cid, s] : scores) s = -1e300;
    }
  }
  const auto tmpl = fj::canonical_template(fj::TemplateKind::kSummarization);
  const auto seed_ins = clean.aspect(kAspect).seed_instruction;
  // The judge's planted qualities come from the clean copy in both runs.
  fj::SimulatedJudgeBackend judge(zepo_params(9, seed_ins.text),
                                  fj::SimulatedWorld::from_dataset(clean, kAspect), tmpl);
  fj::SimulatedParaphraserBackend paraphraser(9);
  fj::OptimizerConfig cfg;
  cfg.seed = 9;
  fs::create_directories(work / "c9");
  const auto p1 = work / "c9" / "clean.jsonl", p2 = work / "c9" / "poisoned.jsonl";
  fj::optimize(seed_ins, clean.unlabeled(), cfg, judge, paraphraser, tmpl,
               fj::TraceOptions{p1, false});
  fj::optimize(seed_ins, poisoned.unlabeled(), cfg, judge, paraphraser, tmpl,
               fj::TraceOptions{p2, false});
  const auto s1 = slurp(p1), s2 = slurp(p2);
  return {!s1.empty() && s1 == s2,
          std::to_string(s1.size()) + " bytes, identical=" + (s1 == s2 ? "yes" : "no")};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() /
                        ("fairjudge-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(work);
  int failed = 0;
  auto report = [&](int id, const std::string& name, const std::function<Result()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << "  ("
              << r.detail << "; " << fmt(secs, 1) << "s)" << std::endl;
  };

  report(1, "fairness formula exactness", criterion1);
  report(2, "spearman matches brute force", criterion2);
  report(3, "debias neutralizes position bias", criterion3);
  const Family family = make_family();
  report(4, "agreement is concave in p_I", [&] { return criterion4(family); });

  std::vector<SeedRun> runs(kSeeds);
  report(5, "optimization gain over 20 seeds", [&] {
    for (int s = 0; s < kSeeds; ++s) zepo_seed(s, runs[s]);
    return criterion5(runs);
  });
  report(6, "fairness best tracks agreement, confidence worst",
         [&] { return criterion6(family); });
  report(7, "debias stacking", [&] {
    for (int s = 0; s < kSeeds; ++s) debias_seed(s, runs[s]);
    return criterion7(runs);
  });
  report(8, "optimize is deterministic", [&] { return criterion8(work); });
  report(9, "optimizer never reads human scores", [&] { return criterion9(work); });

  fs::remove_all(work);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}

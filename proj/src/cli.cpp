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

#include "fairjudge/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "fairjudge/config.hpp"
#include "fairjudge/error.hpp"
#include "fairjudge/optimizer.hpp"
#include "fairjudge/util.hpp"

namespace fairjudge {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string command;
  std::string config;
  std::optional<std::uint64_t> seed;
  bool debias = false;
  std::optional<std::string> objective;
  std::optional<std::size_t> pairs;
  std::optional<int> epochs;
  std::optional<int> population;
  std::optional<std::string> cache_dir;
  std::optional<std::string> out;
  bool resume = false;
};

/// Everything a command needs, built once from config and flags.
struct Session {
  RunConfig config;
  Dataset dataset;
  PromptTemplate tmpl = canonical_template(TemplateKind::kSummarization);
  std::shared_ptr<Backend> evaluator;
  std::shared_ptr<Backend> paraphraser;
  std::string run_id;
  fs::path out_dir;

  fs::path output(const std::string& suffix) const {
    return out_dir / (run_id + suffix);
  }

  Instruction seed_instruction() const {
    Instruction seed = dataset.aspect(config.aspect).seed_instruction;
    if (config.seed_instruction) seed.text = *config.seed_instruction;
    seed.aspect = config.aspect;
    seed.epoch = 0;
    seed.parent_id.reset();
    return seed;
  }

  std::vector<Instruction> analysed_instructions() const {
    if (!config.instructions.empty()) return config.instructions;
    return {seed_instruction()};
  }

  std::vector<PairTask> pairs() const {
    const auto unlabeled = dataset.unlabeled();
    return sample_pairs(unlabeled, effective_pair_budget(config.optimizer, unlabeled),
                        pair_sample_seed(config.optimizer.seed));
  }
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValidationError("cannot write '" + path.string() + "'");
  f << j.dump(2) << '\n';
}

template <typename Fn>
void write_text(const fs::path& path, Fn&& fn) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValidationError("cannot write '" + path.string() + "'");
  fn(f);
}

Session open_session(const Flags& flags) {
  Session s;
  s.config = load_run_config(flags.config);
  auto& opt = s.config.optimizer;
  if (flags.seed) opt.seed = *flags.seed;
  if (flags.debias) opt.debias = true;
  if (flags.objective) opt.objective = objective_kind_from_string(*flags.objective);
  if (flags.pairs) opt.pairs_per_instruction = *flags.pairs;
  if (flags.epochs) opt.epochs = *flags.epochs;
  if (flags.population) opt.population = *flags.population;
  if (flags.cache_dir) s.config.cache_dir = fs::absolute(*flags.cache_dir);
  if (flags.out) s.config.output_dir = fs::absolute(*flags.out);
  validate(opt);

  if (!fs::exists(s.config.dataset)) {
    throw ValidationError("dataset file '" + s.config.dataset.string() + "' does not exist");
  }
  s.dataset = load_dataset(s.config.dataset);
  s.dataset.aspect(s.config.aspect);  // throws if the aspect is unknown
  s.tmpl = load_run_template(s.config);

  s.evaluator = make_evaluator(s.config, s.dataset, s.tmpl);
  s.paraphraser = make_paraphraser(s.config);
  if (s.config.cache_dir) {
    auto cache = std::make_shared<ResponseCache>(*s.config.cache_dir);
    s.evaluator = std::make_shared<CachedBackend>(s.evaluator, cache);
    s.paraphraser = std::make_shared<CachedBackend>(s.paraphraser, cache);
  }

  const json identity{{"command", flags.command},
                      {"seed", opt.seed},
                      {"config", run_identity(s.config)}};
  s.run_id = flags.command + "-" + sha256_hex(identity.dump()).substr(0, 12);
  s.out_dir = s.config.output_dir;
  fs::create_directories(s.out_dir);
  return s;
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

int cmd_optimize(const Flags& flags, std::ostream& out, std::ostream& err) {
  Session s = open_session(flags);
  const auto trace_path = s.output(".trace.jsonl");
  const auto trace = optimize(s.seed_instruction(), s.dataset.unlabeled(), s.config.optimizer,
                              *s.evaluator, *s.paraphraser, s.tmpl,
                              TraceOptions{trace_path, flags.resume});
  for (const auto& e : trace.epochs) {
    for (const auto& w : e.warnings) err << "warning: " << w << '\n';
  }
  write_json(s.output(".best.json"), to_json(trace.best->instruction));
  const json summary = summary_json(trace);
  write_json(s.output(".summary.json"), summary);

  const auto& initial = trace.initial();
  const auto objective = to_string(s.config.optimizer.objective);
  if (trace.resumed_epochs > 0) {
    out << "resumed after epoch " << trace.resumed_epochs - 1 << '\n';
  }
  out << "Initial: " << fixed(fairness(initial.distribution)) << "  (" << objective << " "
      << fixed(initial.score.value, 4) << ")  " << initial.instruction.text << '\n';
  out << "Optimized: " << fixed(fairness(trace.best->distribution)) << "  (" << objective << " "
      << fixed(trace.best->score.value, 4) << ")  " << trace.best->instruction.text << '\n';
  out << "trace: " << trace_path.string() << '\n';
  return 0;
}

int cmd_judge(const Flags& flags, std::ostream& out, std::ostream&) {
  Session s = open_session(flags);
  const auto unlabeled = s.dataset.unlabeled();
  const auto pairs = s.pairs();
  const bool debias = s.config.optimizer.debias;
  const auto& options = s.config.optimizer.judge;
  std::vector<ObjectiveKind> kinds = all_objective_kinds();
  if (flags.objective) kinds = {s.config.optimizer.objective};

  json report = json::array();
  std::ofstream log(s.output(".outcomes.jsonl"), std::ios::binary | std::ios::trunc);
  for (const auto& instruction : s.analysed_instructions()) {
    auto sample = preference_distribution(instruction, pairs, unlabeled, s.tmpl, *s.evaluator,
                                          debias, options);
    write_outcome_log(log, sample.outcomes);
    json scores = json::object();
    out << instruction.id << ":";
    for (const auto& [label, rate] : sample.distribution.rates) {
      out << " p(" << label << ")=" << fixed(rate, 4);
    }
    for (auto kind : kinds) {
      const auto score = score_outcomes(instruction, kind, sample.outcomes, sample.distribution,
                                        *s.evaluator, s.tmpl, options);
      scores[to_string(kind)] = to_json(score);
      out << ' ' << to_string(kind) << '=' << fixed(score.value, 4);
    }
    out << '\n';
    report.push_back(json{{"instruction", to_json(instruction)},
                          {"distribution", to_json(sample.distribution)},
                          {"scores", scores},
                          {"debiased", debias},
                          {"pair_seed", pair_sample_seed(s.config.optimizer.seed)}});
  }
  write_json(s.output(".json"), report);
  return 0;
}

int cmd_agreement(const Flags& flags, std::ostream& out, std::ostream&) {
  Session s = open_session(flags);
  json report = json::array();
  for (const auto& instruction : s.analysed_instructions()) {
    const auto r = agreement(instruction, s.dataset, s.config.aspect, *s.evaluator, s.tmpl,
                             s.config.optimizer.debias, s.config.agreement);
    out << instruction.id << ": rho=" << fixed(r.spearman_rho, 4) << " items=" << r.n_items
        << " skipped=" << r.n_skipped << (r.debiased ? " (debiased)" : "") << '\n';
    report.push_back(to_json(r));
  }
  write_json(s.output(".json"), report);
  return 0;
}

int cmd_sensitivity(const Flags& flags, std::ostream& out, std::ostream&) {
  Session s = open_session(flags);
  const auto pairs = s.pairs();
  const auto instructions = s.analysed_instructions();
  json report = json::object();
  // Debiasing can collapse p_I onto one value, so one fitted regime suffices.
  bool fitted = false;
  for (bool debias : {false, true}) {
    const auto r = sensitivity_report(instructions, s.dataset, s.config.aspect, pairs,
                                      *s.evaluator, s.tmpl, debias, s.config.agreement);
    const std::string regime = debias ? "debiased" : "raw";
    report[regime] = to_json(r);
    write_text(s.output("." + regime + ".tsv"), [&](std::ostream& f) { write_plot_data(f, r); });
    out << "[" << regime << "]\n";
    write_table(out, r);
    fitted = fitted || r.fit.has_value();
  }
  write_json(s.output(".json"), report);
  if (!fitted) {
    out << "quadratic fit undefined in both regimes (need >=3 distinct p_I values)\n";
    return static_cast<int>(ExitCode::kAnalysisUndefined);
  }
  return 0;
}

int cmd_compare(const Flags& flags, std::ostream& out, std::ostream&) {
  Session s = open_session(flags);
  std::vector<ObjectiveKind> kinds = all_objective_kinds();
  if (flags.objective) kinds = {s.config.optimizer.objective};
  const auto comparison =
      compare_objectives(s.analysed_instructions(), s.dataset, s.config.aspect, *s.evaluator,
                         s.tmpl, s.pairs(), kinds, s.config.optimizer.debias, s.config.agreement);
  write_json(s.output(".json"), to_json(comparison));
  write_table(out, comparison);
  if (comparison.insufficient_points()) {
    out << "insufficient points: need at least 2 instructions\n";
    return static_cast<int>(ExitCode::kAnalysisUndefined);
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Instruction search and meta-evaluation for pairwise LLM judges", "fairjudge"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"optimize", "Search for a fairer judge instruction"},
      {"judge", "Preference distribution and objective scores per instruction"},
      {"agreement", "Spearman agreement with human scores"},
      {"sensitivity", "Agreement against p_I with a quadratic fit"},
      {"compare-objectives", "Correlate each objective with agreement"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "Run config (JSON)")->required();
    sub->add_option("--seed", flags.seed, "Seed for all randomness");
    sub->add_flag("--debias", flags.debias, "Average both slot orders");
    sub->add_option("--objective", flags.objective,
                    "fairness | confidence | cf_confidence | calibration");
    sub->add_option("--pairs", flags.pairs, "Pairs sampled per instruction")
        ->check(CLI::PositiveNumber);
    sub->add_option("--epochs", flags.epochs)->check(CLI::PositiveNumber);
    sub->add_option("--population", flags.population)->check(CLI::PositiveNumber);
    sub->add_option("--cache-dir", flags.cache_dir, "Response cache directory");
    sub->add_option("--out", flags.out, "Output directory");
    if (std::string(name) == "optimize") {
      sub->add_flag("--resume", flags.resume, "Continue an interrupted trace");
    }
    sub->callback([&flags, name] { flags.command = name; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    err << app.help();
    return static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (flags.command == "optimize") return cmd_optimize(flags, out, err);
    if (flags.command == "judge") return cmd_judge(flags, out, err);
    if (flags.command == "agreement") return cmd_agreement(flags, out, err);
    if (flags.command == "sensitivity") return cmd_sensitivity(flags, out, err);
    return cmd_compare(flags, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kInternal);
  }
}

}  // namespace fairjudge

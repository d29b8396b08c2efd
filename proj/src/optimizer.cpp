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

#include "fairjudge/optimizer.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "fairjudge/util.hpp"

namespace fairjudge {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kPairSalt = 0x510e527fade682d1ULL;
constexpr std::uint64_t kParaphraseSalt = 0x9b05688c2b3e6c1fULL;
constexpr int kTraceFormat = 1;

std::uint64_t paraphrase_seed(std::uint64_t seed, int epoch, int index, int attempt) {
  std::uint64_t h = splitmix64(seed ^ kParaphraseSalt);
  h = splitmix64(h ^ static_cast<std::uint64_t>(epoch));
  h = splitmix64(h ^ static_cast<std::uint64_t>(index));
  return splitmix64(h ^ static_cast<std::uint64_t>(attempt));
}

std::string candidate_id(const std::string& aspect, int epoch, int index) {
  return aspect + "-e" + std::to_string(epoch) + "-c" + std::to_string(index);
}

ObjectiveScore score_from_json(const json& j) {
  ObjectiveScore s;
  s.instruction_id = j.at("instruction_id").get<std::string>();
  s.kind = objective_kind_from_string(j.at("kind").get<std::string>());
  s.value = j.at("value").get<double>();
  s.n_pairs = j.at("n_pairs").get<std::size_t>();
  if (auto it = j.find("raw"); it != j.end() && it->is_number()) s.raw = it->get<double>();
  return s;
}

PreferenceDistribution distribution_from_json(const json& j) {
  PreferenceDistribution d;
  d.instruction_id = j.at("instruction_id").get<std::string>();
  d.rates = j.at("rates").get<LabelProbs>();
  d.n_pairs = j.at("n_pairs").get<std::size_t>();
  return d;
}

ScoredCandidate candidate_from_json(const json& j) {
  return ScoredCandidate{instruction_from_json(j.at("instruction")),
                         score_from_json(j.at("score")),
                         distribution_from_json(j.at("distribution"))};
}

struct ParsedTrace {
  std::optional<json> header;
  OptimizationTrace trace;
  std::uintmax_t complete_bytes = 0;  // end of the last complete epoch
  bool finished = false;
};

ParsedTrace parse_trace(const std::string& text) {
  ParsedTrace out;
  std::vector<ScoredCandidate> pending;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final line
    json record;
    try {
      record = json::parse(text.substr(pos, nl - pos));
    } catch (const json::exception&) {
      break;
    }
    pos = nl + 1;
    const auto type = record.value("type", std::string{});
    if (type == "header") {
      out.header = record;
      out.trace.pair_seed = record.at("pair_seed").get<std::uint64_t>();
      out.trace.n_pairs = record.at("n_pairs").get<std::size_t>();
      out.complete_bytes = pos;
    } else if (type == "candidate") {
      pending.push_back(candidate_from_json(record));
    } else if (type == "epoch") {
      EpochRecord epoch;
      epoch.epoch = record.at("epoch").get<int>();
      epoch.candidates = std::move(pending);
      pending.clear();
      epoch.incumbent_id = record.at("incumbent_id").get<std::string>();
      epoch.incumbent_value = record.at("incumbent_value").get<double>();
      epoch.warnings = record.value("warnings", std::vector<std::string>{});
      out.trace.epochs.push_back(std::move(epoch));
      out.complete_bytes = pos;
    } else if (type == "summary") {
      out.trace.best = candidate_from_json(record.at("best"));
      out.finished = true;
      out.complete_bytes = pos;
      break;
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read trace file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::app) {
    if (!out_) throw ValidationError("cannot open trace file '" + path.string() + "'");
  }
  void write(const json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

bool contains_keyword(const std::string& text, const std::string& keyword) {
  return to_lower(text).find(to_lower(keyword)) != std::string::npos;
}

}  // namespace

void validate(const OptimizerConfig& config) {
  if (config.epochs < 1) throw ValidationError("optimizer: epochs must be >= 1");
  if (config.population < 1) throw ValidationError("optimizer: population must be >= 1");
  if (config.max_regenerations < 0) {
    throw ValidationError("optimizer: max_regenerations must be >= 0");
  }
  if (!(config.paraphraser_temperature >= 0)) {
    throw ValidationError("optimizer: paraphraser_temperature must be >= 0");
  }
  if (config.judge.verbalizer.size() != 2) {
    throw ValidationError("optimizer: pairwise judging needs exactly two labels");
  }
}

nlohmann::json to_json(const OptimizerConfig& config) {
  return json{{"epochs", config.epochs},
              {"population", config.population},
              {"pairs_per_instruction", config.pairs_per_instruction},
              {"objective", to_string(config.objective)},
              {"paraphraser_temperature", config.paraphraser_temperature},
              {"elitism", config.elitism},
              {"seed", config.seed},
              {"debias", config.debias},
              {"max_regenerations", config.max_regenerations},
              {"paraphrase_max_tokens", config.paraphrase_max_tokens},
              {"verbalizer", config.judge.verbalizer},
              {"top_logprobs_k", config.judge.top_logprobs_k},
              {"fallback_votes", config.judge.fallback_votes},
              {"fallback_temperature", config.judge.fallback_temperature}};
}

std::size_t effective_pair_budget(const OptimizerConfig& config,
                                  const UnlabeledDataset& dataset) {
  return config.pairs_per_instruction > 0 ? config.pairs_per_instruction
                                          : dataset.ordered_pair_count();
}

std::uint64_t pair_sample_seed(std::uint64_t seed) { return splitmix64(seed ^ kPairSalt); }

Proposal propose_candidates(const Instruction& incumbent, int population,
                            Backend& paraphraser, const std::string& aspect,
                            const ProposalOptions& options) {
  validate(incumbent);
  if (population < 1) throw ValidationError("propose_candidates: population must be >= 1");
  const std::string prompt = render_paraphrase_prompt(incumbent, aspect);
  const std::string incumbent_text = trim(incumbent.text);
  Proposal out;
  for (int k = 0; k < population; ++k) {
    std::optional<std::string> accepted;
    std::optional<std::string> duplicate;
    std::string last_problem;
    for (int attempt = 0; attempt <= options.max_regenerations && !accepted; ++attempt) {
      ChatRequest req;
      req.messages = {{"user", prompt}};
      req.temperature = options.temperature;
      req.max_tokens = options.max_tokens;
      req.seed = paraphrase_seed(options.seed, options.epoch, k, attempt);
      std::string text = trim(paraphraser.complete(req).text);
      if (text.empty()) {
        last_problem = "empty paraphrase";
      } else if (!contains_keyword(text, aspect)) {
        last_problem = "paraphrase dropped the keyword '" + aspect + "'";
      } else if (text == incumbent_text) {
        last_problem = "paraphrase repeats the incumbent";
        duplicate = std::move(text);
      } else {
        accepted = std::move(text);
      }
    }
    if (!accepted && duplicate) {
      out.warnings.push_back("epoch " + std::to_string(options.epoch) + " candidate " +
                             std::to_string(k) +
                             ": accepted a copy of the incumbent after " +
                             std::to_string(options.max_regenerations + 1) + " attempts");
      accepted = std::move(duplicate);
    }
    if (!accepted) {
      throw OptimizationError("paraphraser failed for epoch " + std::to_string(options.epoch) +
                                  " candidate " + std::to_string(k) + ": " + last_problem,
                              ExitCode::kBackend);
    }
    out.candidates.push_back(Instruction{candidate_id(aspect, options.epoch, k), *accepted,
                                         aspect, incumbent.id, options.epoch});
  }
  return out;
}

const ScoredCandidate& OptimizationTrace::find(const std::string& instruction_id) const {
  for (const auto& e : epochs) {
    for (const auto& c : e.candidates) {
      if (c.instruction.id == instruction_id) return c;
    }
  }
  throw PreconditionError("trace has no instruction '" + instruction_id + "'");
}

const ScoredCandidate& OptimizationTrace::initial() const {
  if (epochs.empty() || epochs.front().candidates.empty()) {
    throw PreconditionError("trace has no scored seed instruction");
  }
  return epochs.front().candidates.front();
}

nlohmann::json to_json(const ScoredCandidate& candidate) {
  return json{{"instruction", to_json(candidate.instruction)},
              {"score", to_json(candidate.score)},
              {"distribution", to_json(candidate.distribution)}};
}

nlohmann::json summary_json(const OptimizationTrace& trace) {
  if (!trace.best) throw PreconditionError("trace has no final instruction");
  const auto& first = trace.initial();
  auto side = [](const ScoredCandidate& c) {
    return json{{"instruction_id", c.instruction.id},
                {"objective", c.score.value},
                {"fairness", fairness(c.distribution)}};
  };
  return json{{"type", "summary"},
              {"best", to_json(*trace.best)},
              {"initial", side(first)},
              {"final", side(*trace.best)},
              {"epochs", static_cast<int>(trace.epochs.size()) - 1}};
}

OptimizationTrace read_trace(const std::filesystem::path& path) {
  return parse_trace(read_file(path)).trace;
}

OptimizationTrace optimize(const Instruction& seed_instruction, const UnlabeledDataset& dataset,
                           const OptimizerConfig& config, Backend& evaluator,
                           Backend& paraphraser, const PromptTemplate& tmpl,
                           const std::optional<TraceOptions>& trace_options) {
  validate(config);
  validate(seed_instruction);
  const std::string& aspect = seed_instruction.aspect;
  if (aspect.empty()) throw ValidationError("seed instruction has no aspect");

  OptimizationTrace trace;
  trace.pair_seed = pair_sample_seed(config.seed);
  trace.n_pairs = effective_pair_budget(config, dataset);
  const auto pairs = sample_pairs(dataset, trace.n_pairs, trace.pair_seed);

  const json header{{"type", "header"},
                    {"format", kTraceFormat},
                    {"dataset", dataset.name},
                    {"aspect", aspect},
                    {"seed_instruction", to_json(seed_instruction)},
                    {"config", to_json(config)},
                    {"template", sha256_hex(tmpl.body())},
                    {"evaluator", evaluator.id()},
                    {"paraphraser", paraphraser.id()},
                    {"pair_seed", trace.pair_seed},
                    {"n_pairs", trace.n_pairs}};

  std::optional<TraceWriter> writer;
  if (trace_options) {
    const auto& path = trace_options->path;
    bool have_header = false;
    if (trace_options->resume && std::filesystem::exists(path)) {
      auto parsed = parse_trace(read_file(path));
      if (parsed.header) {
        if (*parsed.header != header) {
          throw ValidationError("trace file '" + path.string() +
                                "' belongs to a different run configuration");
        }
        have_header = true;
        if (parsed.finished) {
          parsed.trace.resumed_epochs = static_cast<int>(parsed.trace.epochs.size());
          return parsed.trace;
        }
        trace.epochs = std::move(parsed.trace.epochs);
        trace.resumed_epochs = static_cast<int>(trace.epochs.size());
      }
      std::filesystem::resize_file(path, parsed.header ? parsed.complete_bytes : 0);
    } else if (std::filesystem::exists(path)) {
      std::filesystem::resize_file(path, 0);
    }
    writer.emplace(path);
    if (!have_header) writer->write(header);
  }

  auto score = [&](const Instruction& instruction, int epoch, int index) {
    auto eval = evaluate_instruction(instruction, config.objective, dataset, pairs, evaluator,
                                     tmpl, config.debias, config.judge);
    ScoredCandidate c{instruction, std::move(eval.score), std::move(eval.distribution)};
    if (writer) {
      json record{{"type", "candidate"}, {"epoch", epoch}, {"index", index}};
      record.update(to_json(c));
      record["score"]["pair_seed"] = trace.pair_seed;
      writer->write(record);
    }
    return c;
  };
  auto close_epoch = [&](EpochRecord& record, const ScoredCandidate& incumbent) {
    record.incumbent_id = incumbent.instruction.id;
    record.incumbent_value = incumbent.score.value;
    if (writer) {
      writer->write(json{{"type", "epoch"},
                         {"epoch", record.epoch},
                         {"incumbent_id", record.incumbent_id},
                         {"incumbent_value", record.incumbent_value},
                         {"warnings", record.warnings}});
    }
    trace.epochs.push_back(std::move(record));
  };

  try {
    if (trace.epochs.empty()) {
      EpochRecord first;
      first.epoch = 0;
      first.candidates.push_back(score(seed_instruction, 0, 0));
      const ScoredCandidate seed_scored = first.candidates.front();
      close_epoch(first, seed_scored);
    }
    ScoredCandidate incumbent = trace.find(trace.epochs.back().incumbent_id);

    for (int e = static_cast<int>(trace.epochs.size()); e <= config.epochs; ++e) {
      ProposalOptions popts;
      popts.temperature = config.paraphraser_temperature;
      popts.seed = config.seed;
      popts.epoch = e;
      popts.max_regenerations = config.max_regenerations;
      popts.max_tokens = config.paraphrase_max_tokens;
      auto proposal =
          propose_candidates(incumbent.instruction, config.population, paraphraser, aspect, popts);

      EpochRecord record;
      record.epoch = e;
      record.warnings = std::move(proposal.warnings);
      for (std::size_t k = 0; k < proposal.candidates.size(); ++k) {
        record.candidates.push_back(score(proposal.candidates[k], e, static_cast<int>(k)));
      }
      // Strict improvement only, so ties stay with the earlier entry.
      const ScoredCandidate* best = config.elitism ? &incumbent : &record.candidates.front();
      for (const auto& c : record.candidates) {
        if (c.score.value > best->score.value) best = &c;
      }
      incumbent = *best;
      close_epoch(record, incumbent);
    }
    trace.best = incumbent;
    if (writer) writer->write(summary_json(trace));
  } catch (const PartialTraceError&) {
    throw;
  } catch (const Error& err) {
    throw PartialTraceError(err.what(), err.exit_code(), trace);
  }
  return trace;
}

nlohmann::json to_json(const ObjectiveComparison& comparison) {
  json rows = json::array();
  for (const auto& r : comparison.rows) {
    json scores = json::object();
    for (const auto& [kind, v] : r.scores) scores[to_string(kind)] = v;
    rows.push_back(json{{"instruction_id", r.instruction_id},
                        {"scores", scores},
                        {"p_first", r.p_first},
                        {"rho", r.rho}});
  }
  json corr = json::array();
  for (const auto& c : comparison.correlations) {
    corr.push_back(json{{"kind", to_string(c.kind)},
                        {"rho", c.rho ? json(*c.rho) : json()},
                        {"status", c.status}});
  }
  return json{{"rows", rows}, {"correlations", corr}, {"debiased", comparison.debiased}};
}

void write_table(std::ostream& out, const ObjectiveComparison& comparison) {
  out << std::left << std::setw(24) << "instruction" << std::right << std::setw(10) << "p_I"
      << std::setw(10) << "rho";
  for (const auto& c : comparison.correlations) {
    out << std::setw(16) << to_string(c.kind);
  }
  out << '\n' << std::fixed << std::setprecision(4);
  for (const auto& r : comparison.rows) {
    out << std::left << std::setw(24) << r.instruction_id << std::right << std::setw(10)
        << r.p_first << std::setw(10) << r.rho;
    for (const auto& c : comparison.correlations) out << std::setw(16) << r.scores.at(c.kind);
    out << '\n';
  }
  out << std::left << std::setw(44) << "corr(objective, rho)" << std::right;
  for (const auto& c : comparison.correlations) {
    if (c.rho) {
      out << std::setw(16) << *c.rho;
    } else {
      out << std::setw(16) << c.status;
    }
  }
  out << '\n';
  out.unsetf(std::ios::floatfield);
}

ObjectiveComparison compare_objectives(const std::vector<Instruction>& instructions,
                                       const Dataset& dataset, const std::string& aspect,
                                       Backend& backend, const PromptTemplate& tmpl,
                                       const std::vector<PairTask>& pairs,
                                       const std::vector<ObjectiveKind>& kinds, bool debias,
                                       const AgreementOptions& options) {
  if (!dataset.has_scores(aspect)) {
    throw PreconditionError("compare-objectives needs human scores for aspect '" + aspect +
                            "'");
  }
  if (pairs.empty()) throw PreconditionError("compare-objectives: no pairs to judge");
  const auto unlabeled = dataset.unlabeled();
  ObjectiveComparison out;
  out.debiased = debias;
  for (const auto& instruction : instructions) {
    auto sample = preference_distribution(instruction, pairs, unlabeled, tmpl, backend, debias,
                                          options.judge);
    ObjectiveRow row;
    row.instruction_id = instruction.id;
    for (auto kind : kinds) {
      row.scores[kind] = score_outcomes(instruction, kind, sample.outcomes, sample.distribution,
                                        backend, tmpl, options.judge)
                             .value;
    }
    row.p_first = sample.distribution.rates.at(options.judge.verbalizer.front());
    row.rho = agreement(instruction, dataset, aspect, backend, tmpl, debias, options)
                  .spearman_rho;
    out.rows.push_back(std::move(row));
  }
  std::vector<double> rhos;
  for (const auto& r : out.rows) rhos.push_back(r.rho);
  for (auto kind : kinds) {
    ObjectiveCorrelation c{kind, std::nullopt, "ok"};
    if (out.rows.size() < 2) {
      c.status = "insufficient points";
    } else {
      std::vector<double> xs;
      for (const auto& r : out.rows) xs.push_back(r.scores.at(kind));
      try {
        c.rho = spearman(xs, rhos);
      } catch (const UndefinedStatisticError&) {
        c.status = "undefined";
      }
    }
    out.correlations.push_back(std::move(c));
  }
  return out;
}

}  // namespace fairjudge

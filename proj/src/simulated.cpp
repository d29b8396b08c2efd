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

#include "fairjudge/simulated.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "fairjudge/error.hpp"
#include "fairjudge/util.hpp"

namespace fairjudge {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kDeltaSalt = 0x6a09e667f3bcc908ULL;
constexpr std::uint64_t kSharpSalt = 0xbb67ae8584caa73bULL;
constexpr std::uint64_t kNoiseSalt = 0x3c6ef372fe94f82bULL;
constexpr std::uint64_t kVoteSalt = 0xa54ff53a5f1d36f1ULL;

double hashed_symmetric(std::string_view text, std::uint64_t seed, std::uint64_t salt) {
  const std::uint64_t h = splitmix64(fnv1a64(text, splitmix64(seed ^ salt)));
  return 2.0 * unit_interval(h) - 1.0;
}

}  // namespace

double SimulatedEvaluatorParams::delta(std::string_view instruction) const {
  if (auto it = instruction_bias.find(std::string(instruction)); it != instruction_bias.end()) {
    return it->second;
  }
  if (instruction_bias_scale == 0) return 0.0;
  return instruction_bias_scale * hashed_symmetric(instruction, noise_seed, kDeltaSalt);
}

double SimulatedEvaluatorParams::sharpness(std::string_view instruction) const {
  if (auto it = instruction_sharpness.find(std::string(instruction));
      it != instruction_sharpness.end()) {
    return it->second;
  }
  if (sharpness_spread == 0) return 1.0;
  return std::exp(sharpness_spread * hashed_symmetric(instruction, noise_seed, kSharpSalt));
}

double SimulatedEvaluatorParams::noise(std::string_view source, std::string_view a,
                                       std::string_view b) const {
  if (noise_scale == 0) return 0.0;
  const std::uint64_t base = fnv1a64(source, splitmix64(noise_seed ^ kNoiseSalt));
  auto draw = [&](std::string_view x, std::string_view y) {
    std::uint64_t h = fnv1a64(x, base);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(y, h);
    return hashed_normal(h);
  };
  // Difference of two iid normals scaled back to unit variance.
  return noise_scale * (draw(a, b) - draw(b, a)) / std::numbers::sqrt2;
}

double SimulatedEvaluatorParams::logit(double quality_a, double quality_b,
                                       std::string_view instruction, std::string_view source,
                                       std::string_view text_a, std::string_view text_b) const {
  const double inner = quality_sensitivity * (quality_a - quality_b) + position_bias +
                       delta(instruction) + noise(source, text_a, text_b);
  return sharpness(instruction) * inner;
}

nlohmann::json to_json(const SimulatedEvaluatorParams& p) {
  return json{{"quality_sensitivity", p.quality_sensitivity},
              {"position_bias", p.position_bias},
              {"instruction_bias", {{"table", p.instruction_bias},
                                    {"scale", p.instruction_bias_scale}}},
              {"sharpness", {{"table", p.instruction_sharpness},
                             {"spread", p.sharpness_spread}}},
              {"noise_scale", p.noise_scale},
              {"noise_seed", p.noise_seed}};
}

SimulatedEvaluatorParams simulated_params_from_json(const nlohmann::json& j) {
  SimulatedEvaluatorParams p;
  try {
    p.quality_sensitivity = j.value("quality_sensitivity", 1.0);
    p.position_bias = j.value("position_bias", 0.0);
    if (auto it = j.find("instruction_bias"); it != j.end()) {
      p.instruction_bias = it->value("table", std::map<std::string, double>{});
      p.instruction_bias_scale = it->value("scale", 0.0);
    }
    if (auto it = j.find("sharpness"); it != j.end()) {
      p.instruction_sharpness = it->value("table", std::map<std::string, double>{});
      p.sharpness_spread = it->value("spread", 0.0);
    }
    p.noise_scale = j.value("noise_scale", 0.0);
    p.noise_seed = j.value("noise_seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("simulated evaluator parameters: ") + e.what());
  }
  for (const auto& [text, s] : p.instruction_sharpness) {
    if (!(s > 0)) throw ValidationError("simulated evaluator: sharpness must be > 0");
  }
  return p;
}

std::string SimulatedWorld::key(std::string_view source, std::string_view text) {
  std::string k(source);
  k.push_back('\x1f');
  k.append(text);
  return k;
}

SimulatedWorld SimulatedWorld::from_dataset(const Dataset& dataset, const std::string& aspect) {
  if (!dataset.has_scores(aspect)) {
    throw PreconditionError("simulated world: dataset lacks scores for aspect '" + aspect + "'");
  }
  SimulatedWorld world;
  for (const auto& item : dataset.items) {
    const auto& scores = item.aspect_scores.at(aspect);
    for (const auto& c : item.content.candidates) {
      world.set_quality(item.content.source_text, c.text, scores.at(c.id));
    }
  }
  return world;
}

void SimulatedWorld::set_quality(std::string_view source, std::string_view text,
                                 double quality) {
  quality_[key(source, text)] = quality;
  double sum = 0;
  for (const auto& [_, q] : quality_) sum += q;
  mean_ = sum / static_cast<double>(quality_.size());
}

double SimulatedWorld::quality(std::string_view source, std::string_view text) const {
  auto it = quality_.find(key(source, text));
  return it == quality_.end() ? mean_ : it->second;
}

std::string SimulatedWorld::fingerprint() const {
  return sha256_hex(json(quality_).dump());
}

SimulatedJudgeBackend::SimulatedJudgeBackend(SimulatedEvaluatorParams params,
                                             SimulatedWorld world,
                                             PromptTemplate pairwise_template,
                                             std::vector<std::string> verbalizer)
    : params_(std::move(params)),
      world_(std::move(world)),
      pairwise_template_(std::move(pairwise_template)),
      pointwise_template_(canonical_template(TemplateKind::kPointwise)),
      verbalizer_(std::move(verbalizer)) {
  if (verbalizer_.size() != 2) {
    throw ValidationError("simulated judge answers two-label comparisons only");
  }
  const json identity{{"params", to_json(params_)},
                      {"world", world_.fingerprint()},
                      {"template", pairwise_template_.body()},
                      {"verbalizer", verbalizer_}};
  id_ = "simulated-judge:" + sha256_hex(identity.dump()).substr(0, 16);
}

ChatResponse SimulatedJudgeBackend::complete(const ChatRequest& request) {
  validate(request);
  const std::string& context = request.messages.back().content;
  if (auto slots = pairwise_template_.match(context)) return pairwise(*slots, request);
  if (auto slots = pointwise_template_.match(context)) return pointwise(*slots, request);
  throw ProtocolError("simulated judge: prompt matches neither the pairwise nor the "
                      "pointwise template");
}

ChatResponse SimulatedJudgeBackend::pairwise(const std::map<std::string, std::string>& slots,
                                             const ChatRequest& request) const {
  const bool dialog = pairwise_template_.kind() == TemplateKind::kDialog;
  const std::string& source = slots.at(dialog ? "DIALOG_HISTORY" : "SOURCE_TEXT");
  const std::string& text_a = slots.at(dialog ? "RESPONSE_1" : "SUMMARY_1");
  const std::string& text_b = slots.at(dialog ? "RESPONSE_2" : "SUMMARY_2");
  const std::string& instruction = slots.at("INSTRUCTION");
  const double z = params_.logit(world_.quality(source, text_a), world_.quality(source, text_b),
                                 instruction, source, text_a, text_b);
  ChatResponse response;
  if (request.temperature > 0) {
    const std::uint64_t h =
        splitmix64(fnv1a64(request.messages.back().content, request.seed ^ kVoteSalt));
    response.text = unit_interval(h) < sigmoid(z) ? verbalizer_[0] : verbalizer_[1];
  } else {
    response.text = z >= 0 ? verbalizer_[0] : verbalizer_[1];
  }
  if (request.want_label_logprobs) {
    response.first_token_logprobs =
        std::map<std::string, double>{{verbalizer_[0], log_sigmoid(z)},
                                      {verbalizer_[1], log_sigmoid(-z)}};
  }
  return response;
}

ChatResponse SimulatedJudgeBackend::pointwise(const std::map<std::string, std::string>& slots,
                                              const ChatRequest& request) const {
  const std::string& source = slots.at("SOURCE_TEXT");
  const std::string& instruction = slots.at("INSTRUCTION");
  const double q = world_.quality(source, slots.at("SUMMARY"));
  const double inner = params_.quality_sensitivity * (q - world_.mean_quality()) +
                       params_.delta(instruction);
  const double mean_score = 1.0 + 4.0 * sigmoid(params_.sharpness(instruction) * inner);
  constexpr double kWidth = 0.75;
  std::array<double, 5> lps;
  for (int s = 1; s <= 5; ++s) {
    lps[s - 1] = -(s - mean_score) * (s - mean_score) / (2 * kWidth * kWidth);
  }
  const double m = *std::max_element(lps.begin(), lps.end());
  double z = 0;
  for (double lp : lps) z += std::exp(lp - m);
  const double log_z = m + std::log(z);
  ChatResponse response;
  const auto best = std::max_element(lps.begin(), lps.end()) - lps.begin();
  response.text = std::to_string(best + 1);
  if (request.want_label_logprobs) {
    std::map<std::string, double> out;
    for (int s = 1; s <= 5; ++s) out[std::to_string(s)] = lps[s - 1] - log_z;
    response.first_token_logprobs = std::move(out);
  }
  return response;
}

ChatResponse SimulatedParaphraserBackend::complete(const ChatRequest& request) {
  validate(request);
  static const PromptTemplate tmpl = canonical_template(TemplateKind::kParaphrase);
  const auto slots = tmpl.match(request.messages.back().content);
  if (!slots) {
    throw ProtocolError("simulated paraphraser: request is not a paraphrase prompt");
  }
  const std::string& aspect = slots->at("ASPECT");
  static const std::array<const char*, 6> kOpeners{
      "Evaluate and compare the {} of the two candidates for the given source text.",
      "Assess and contrast the {} of the two summaries using the provided text.",
      "Judge the {} of both candidates against the source.",
      "Consider the {} of each option carefully.",
      "Compare the two candidates with respect to {}.",
      "Review both options and weigh their {}."};
  static const std::array<const char*, 6> kMiddles{
      " Take into account clarity and logical progression.",
      " Focus on how well each one reads as a whole.",
      " Look closely at the details of the text.",
      "",
      " Think about the overall quality of each candidate.",
      " Pay attention to the main points of the article."};
  static const std::array<const char*, 4> kQuestions{
      " Which candidate demonstrates stronger {}?", " Which one has better {}?",
      " Decide which option shows more {}.", " Which is superior in terms of {}?"};
  static const std::array<const char*, 5> kClosings{
      " Select 'A' for option A or 'B' for option B.",
      " If the candidate A is better, please return 'A'. If the candidate B is better, "
      "please return 'B'.",
      " Choose either 'A' or 'B'.", " Return 'A' or 'B' only.",
      " Indicate your chosen option with 'A' or 'B'."};

  auto fill = [&](const char* pattern) {
    std::string s(pattern);
    const auto at = s.find("{}");
    if (at != std::string::npos) s.replace(at, 2, aspect);
    return s;
  };
  std::uint64_t h = fnv1a64(slots->at("INSTRUCTION"), splitmix64(seed_));
  h = splitmix64(h ^ splitmix64(request.seed));
  const auto pick = [&](std::size_t n) {
    h = splitmix64(h);
    return static_cast<std::size_t>(h % n);
  };
  std::string text = fill(kOpeners[pick(kOpeners.size())]);
  text += kMiddles[pick(kMiddles.size())];
  text += fill(kQuestions[pick(kQuestions.size())]);
  text += kClosings[pick(kClosings.size())];
  return ChatResponse{text, std::nullopt};
}

std::string default_seed_instruction(const std::string& aspect) {
  return "Evaluate and compare the " + aspect +
         " of the two summary candidates for the given source text. Which summary "
         "candidate has better " +
         aspect +
         "? If the candidate A is better, please return 'A'. If the candidate B is "
         "better, please return 'B'. You must return the choice only.";
}

Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec) {
  if (spec.n_candidates < 2) throw PreconditionError("synthetic dataset: need >=2 candidates");
  std::mt19937_64 engine(spec.seed);
  std::uniform_real_distribution<double> score(spec.min_score, spec.max_score);
  Dataset ds;
  ds.name = spec.name;
  for (const auto& aspect : spec.aspects) {
    AspectSpec a;
    a.name = aspect;
    a.seed_instruction = Instruction{aspect + "-seed", default_seed_instruction(aspect), aspect,
                                     std::nullopt, 0};
    ds.aspects.push_back(std::move(a));
  }
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    EvalItem item;
    item.content.id = "doc" + std::to_string(i);
    item.content.source_text = "Source document " + std::to_string(i) + " of " + spec.name + ".";
    for (std::size_t c = 0; c < spec.n_candidates; ++c) {
      item.content.candidates.push_back(
          Candidate{"d" + std::to_string(i) + "c" + std::to_string(c),
                    "Summary " + std::to_string(c) + " of document " + std::to_string(i) + "."});
    }
    for (const auto& aspect : spec.aspects) {
      auto& scores = item.aspect_scores[aspect];
      for (const auto& c : item.content.candidates) scores[c.id] = score(engine);
    }
    ds.items.push_back(std::move(item));
  }
  validate(ds);
  return ds;
}

double simulated_agreement_oracle(const SimulatedEvaluatorParams& params,
                                  const Dataset& dataset, const std::string& aspect,
                                  const std::string& instruction_text, bool debias,
                                  ComparisonSchedule schedule, std::uint64_t schedule_seed) {
  if (!dataset.has_scores(aspect)) {
    throw PreconditionError("simulated agreement: dataset lacks scores for '" + aspect + "'");
  }
  double total = 0;
  std::size_t used = 0;
  for (const auto& item : dataset.items) {
    const auto& content = item.content;
    const auto& q = item.aspect_scores.at(aspect);
    auto text_of = [&](const std::string& id) -> const std::string& {
      return content.candidate(id).text;
    };
    std::map<std::string, double> wins, seen;
    for (const auto& pair : comparison_pairs(content, schedule, schedule_seed)) {
      const double z_fwd = params.logit(q.at(pair.first), q.at(pair.second), instruction_text,
                                        content.source_text, text_of(pair.first),
                                        text_of(pair.second));
      double margin = z_fwd;  // > 0 means pair.first wins
      if (debias) {
        const double z_bwd =
            params.logit(q.at(pair.second), q.at(pair.first), instruction_text,
                         content.source_text, text_of(pair.second), text_of(pair.first));
        margin = (sigmoid(z_fwd) + (1.0 - sigmoid(z_bwd))) / 2.0 - 0.5;
      }
      const double share = margin > 0 ? 1.0 : (margin < 0 ? 0.0 : 0.5);
      wins[pair.first] += share;
      wins[pair.second] += 1.0 - share;
      seen[pair.first] += 1;
      seen[pair.second] += 1;
    }
    std::vector<double> judge, human;
    for (const auto& c : content.candidates) {
      judge.push_back(wins[c.id] / seen[c.id]);
      human.push_back(q.at(c.id));
    }
    if (std::all_of(human.begin(), human.end(), [&](double v) { return v == human[0]; })) {
      continue;
    }
    const bool flat =
        std::all_of(judge.begin(), judge.end(), [&](double v) { return v == judge[0]; });
    total += flat ? 0.0 : spearman(judge, human);
    ++used;
  }
  if (used == 0) throw UndefinedStatisticError("simulated agreement: no usable items");
  return total / static_cast<double>(used);
}

}  // namespace fairjudge

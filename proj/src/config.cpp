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

#include "fairjudge/config.hpp"

#include <cstdlib>
#include <fstream>

#include "fairjudge/error.hpp"

namespace fairjudge {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::optional<std::string> getenv_lookup(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void interpolate_tree(json& node,
                      const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  if (node.is_string()) {
    node = interpolate_env(node.get<std::string>(), lookup);
  } else if (node.is_structured()) {
    for (auto& child : node) interpolate_tree(child, lookup);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

BackendSpec backend_from_json(const json& j, const fs::path& base, const char* role,
                              const char* key_env) {
  BackendSpec spec;
  const auto kind = j.value("kind", std::string{});
  if (kind == "remote") {
    spec.kind = BackendSpec::Kind::kRemote;
    spec.remote.endpoint = j.value("endpoint", std::string{});
    spec.remote.model = j.value("model", std::string{});
    spec.remote.api_key = j.value("api_key", std::string{});
    spec.remote.max_attempts = j.value("max_attempts", spec.remote.max_attempts);
    spec.remote.max_in_flight = j.value("max_in_flight", spec.remote.max_in_flight);
    spec.remote.timeout = std::chrono::seconds(j.value("timeout_s", 120));
    spec.remote.initial_backoff = std::chrono::milliseconds(j.value("backoff_ms", 500));
    if (auto it = j.find("api_key_env"); it != j.end()) {
      const auto name = it->get<std::string>();
      auto v = getenv_lookup(name);
      if (!v) throw ValidationError(std::string(role) + ": environment variable '" + name +
                                    "' is not set");
      spec.remote.api_key = *v;
    }
    if (auto v = getenv_lookup(key_env)) spec.remote.api_key = *v;
    if (spec.remote.endpoint.empty() || spec.remote.model.empty()) {
      throw ValidationError(std::string(role) + ": remote backend needs endpoint and model");
    }
  } else if (kind == "simulated") {
    spec.kind = BackendSpec::Kind::kSimulated;
    spec.simulated = simulated_params_from_json(j);
    spec.paraphraser_seed = j.value("seed", std::uint64_t{0});
    if (auto it = j.find("world_dataset"); it != j.end()) {
      spec.world_dataset = resolve(base, it->get<std::string>());
    }
  } else {
    throw ValidationError(std::string(role) + ".kind must be \"remote\" or \"simulated\"");
  }
  return spec;
}

}  // namespace

std::string interpolate_env(
    const std::string& text,
    const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, 3, "$${") == 0) {
      out += "${";
      i += 3;
      continue;
    }
    if (text.compare(i, 2, "${") == 0) {
      const auto close = text.find('}', i + 2);
      if (close == std::string::npos) {
        throw ValidationError("unterminated ${...} in config value");
      }
      const std::string name = text.substr(i + 2, close - i - 2);
      auto value = lookup(name);
      if (!value) throw ValidationError("environment variable '" + name + "' is not set");
      out += *value;
      i = close + 1;
      continue;
    }
    out += text[i++];
  }
  return out;
}

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  json j = doc;
  interpolate_tree(j, getenv_lookup);
  RunConfig c;
  c.raw = j;
  try {
    if (!j.contains("dataset")) throw ValidationError("config: missing 'dataset'");
    c.dataset = resolve(base_dir, j.at("dataset").get<std::string>());
    c.aspect = j.value("aspect", std::string{});
    if (c.aspect.empty()) throw ValidationError("config: missing 'aspect'");
    if (auto it = j.find("template"); it != j.end()) {
      if (it->is_string()) {
        c.template_path = resolve(base_dir, it->get<std::string>());
      } else {
        if (it->contains("path")) {
          c.template_path = resolve(base_dir, it->at("path").get<std::string>());
        }
        c.template_kind = template_kind_from_string(it->value("kind", "summarization"));
      }
    }
    if (!j.contains("evaluator")) throw ValidationError("config: missing 'evaluator'");
    c.evaluator = backend_from_json(j.at("evaluator"), base_dir, "evaluator",
                                    "EVALUATOR_API_KEY");
    c.paraphraser = j.contains("paraphraser")
                        ? backend_from_json(j.at("paraphraser"), base_dir, "paraphraser",
                                            "PARAPHRASER_API_KEY")
                        : BackendSpec{};

    const json opt = j.value("optimizer", json::object());
    auto& o = c.optimizer;
    o.epochs = opt.value("epochs", o.epochs);
    o.population = opt.value("population", o.population);
    o.pairs_per_instruction = opt.value("pairs_per_instruction", o.pairs_per_instruction);
    o.objective = objective_kind_from_string(opt.value("objective", std::string("fairness")));
    o.paraphraser_temperature = opt.value("paraphraser_temperature", o.paraphraser_temperature);
    o.elitism = opt.value("elitism", o.elitism);
    o.max_regenerations = opt.value("max_regenerations", o.max_regenerations);
    o.seed = j.value("seed", std::uint64_t{0});
    o.debias = j.value("debias", false);

    const json judge = j.value("judge", json::object());
    o.judge.verbalizer = judge.value("verbalizer", o.judge.verbalizer);
    o.judge.top_logprobs_k = judge.value("top_logprobs_k", o.judge.top_logprobs_k);
    o.judge.fallback_votes = judge.value("fallback_votes", o.judge.fallback_votes);
    o.judge.fallback_temperature =
        judge.value("fallback_temperature", o.judge.fallback_temperature);
    c.workers = j.value("workers", std::size_t{1});
    o.judge.workers = c.workers;

    if (auto it = j.find("seed_instruction"); it != j.end()) {
      c.seed_instruction = it->get<std::string>();
    }
    for (const auto& ij : j.value("instructions", json::array())) {
      Instruction ins = ij.is_string()
                            ? Instruction{"", ij.get<std::string>(), c.aspect, std::nullopt, 0}
                            : instruction_from_json(ij);
      if (ins.id.empty()) ins.id = c.aspect + "-i" + std::to_string(c.instructions.size());
      if (ins.aspect.empty()) ins.aspect = c.aspect;
      validate(ins);
      c.instructions.push_back(std::move(ins));
    }

    const json ag = j.value("agreement", json::object());
    c.agreement.schedule = comparison_schedule_from_string(ag.value("schedule", "single_order"));
    c.agreement.schedule_seed = ag.value("schedule_seed", std::uint64_t{0});
    c.agreement.judge = o.judge;

    if (auto it = j.find("cache_dir"); it != j.end() && !it->is_null()) {
      c.cache_dir = resolve(base_dir, it->get<std::string>());
    }
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string(".")));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  validate(c.optimizer);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config file '" + path.string() + "': " + e.what());
  }
  return run_config_from_json(doc, fs::absolute(path).parent_path());
}

nlohmann::json run_identity(const RunConfig& config) {
  json j = config.raw;
  for (const char* role : {"evaluator", "paraphraser"}) {
    if (j.contains(role) && j[role].is_object()) j[role].erase("api_key");
  }
  // Flag overrides land in the parsed config, not the raw document.
  j["optimizer"] = to_json(config.optimizer);
  j["output_dir"] = nullptr;
  j["cache_dir"] = nullptr;
  j["workers"] = nullptr;
  return j;
}

PromptTemplate load_run_template(const RunConfig& config) {
  if (config.template_path) return load_template(*config.template_path, config.template_kind);
  return canonical_template(config.template_kind);
}

std::shared_ptr<Backend> make_evaluator(const RunConfig& config, const Dataset& dataset,
                                        const PromptTemplate& tmpl) {
  const auto& spec = config.evaluator;
  if (spec.kind == BackendSpec::Kind::kRemote) {
    return std::make_shared<RemoteChatBackend>(spec.remote);
  }
  const Dataset world_data =
      spec.world_dataset ? load_dataset(*spec.world_dataset) : dataset;
  return std::make_shared<SimulatedJudgeBackend>(
      spec.simulated, SimulatedWorld::from_dataset(world_data, config.aspect), tmpl,
      config.optimizer.judge.verbalizer);
}

std::shared_ptr<Backend> make_paraphraser(const RunConfig& config) {
  const auto& spec = config.paraphraser;
  if (spec.kind == BackendSpec::Kind::kRemote) {
    return std::make_shared<RemoteChatBackend>(spec.remote);
  }
  return std::make_shared<SimulatedParaphraserBackend>(spec.paraphraser_seed);
}

}  // namespace fairjudge

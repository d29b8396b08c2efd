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

// Run configuration: one JSON file per run, with ${VAR} interpolation.

#ifndef FAIRJUDGE_CONFIG_HPP_
#define FAIRJUDGE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairjudge/backend.hpp"
#include "fairjudge/metaeval.hpp"
#include "fairjudge/model.hpp"
#include "fairjudge/optimizer.hpp"
#include "fairjudge/remote_backend.hpp"
#include "fairjudge/simulated.hpp"
#include "fairjudge/templates.hpp"

namespace fairjudge {

struct BackendSpec {
  enum class Kind { kRemote, kSimulated };
  Kind kind = Kind::kSimulated;
  RemoteBackendConfig remote;
  /// Simulated judge only.
  SimulatedEvaluatorParams simulated;
  /// Simulated judge: dataset whose scores are planted as qualities
  /// (defaults to the run dataset).
  std::optional<std::filesystem::path> world_dataset;
  /// Simulated paraphraser only.
  std::uint64_t paraphraser_seed = 0;
};

struct RunConfig {
  std::filesystem::path dataset;
  std::string aspect;
  std::optional<std::filesystem::path> template_path;
  TemplateKind template_kind = TemplateKind::kSummarization;
  BackendSpec evaluator;
  BackendSpec paraphraser;
  OptimizerConfig optimizer;
  /// Overrides the dataset's seed instruction for the aspect.
  std::optional<std::string> seed_instruction;
  /// Instructions analysed by judge/agreement/sensitivity/compare-objectives.
  std::vector<Instruction> instructions;
  AgreementOptions agreement;
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path output_dir = ".";
  std::size_t workers = 1;

  /// The file as loaded, after interpolation (secrets included).
  nlohmann::json raw;
};

/// Replaces ${NAME} with the environment value. Unset variables are a
/// ValidationError; "$${" escapes a literal "${".
std::string interpolate_env(const std::string& text,
                            const std::function<std::optional<std::string>(const std::string&)>&
                                lookup);

/// Parses a config document. Relative paths resolve against `base_dir`.
/// EVALUATOR_API_KEY / PARAPHRASER_API_KEY, when set, replace the keys.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Config fields that define a run's results, without secrets.
nlohmann::json run_identity(const RunConfig& config);

/// Builds a backend from its spec. `dataset` feeds the simulated judge's
/// planted qualities when no world dataset is given.
std::shared_ptr<Backend> make_evaluator(const RunConfig& config, const Dataset& dataset,
                                        const PromptTemplate& tmpl);
std::shared_ptr<Backend> make_paraphraser(const RunConfig& config);

PromptTemplate load_run_template(const RunConfig& config);

}  // namespace fairjudge

#endif  // FAIRJUDGE_CONFIG_HPP_

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

// Domain types shared by every module, plus dataset ingestion.
//
// Human scores live in `Dataset` only. Everything on the optimization path
// consumes `UnlabeledDataset`, which has no field that could hold them.

#ifndef FAIRJUDGE_MODEL_HPP_
#define FAIRJUDGE_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fairjudge {

struct Instruction {
  std::string id;
  std::string text;
  std::string aspect;
  std::optional<std::string> parent_id;
  int epoch = 0;

  bool operator==(const Instruction&) const = default;
};

/// Throws ValidationError if the instruction text is empty.
void validate(const Instruction& instruction);

struct Candidate {
  std::string id;
  std::string text;

  bool operator==(const Candidate&) const = default;
};

/// An item as the evaluator sees it: source and candidates, nothing else.
struct ItemContent {
  std::string id;
  std::string source_text;
  std::vector<Candidate> candidates;

  const Candidate& candidate(const std::string& candidate_id) const;
  bool has_candidate(const std::string& candidate_id) const;

  bool operator==(const ItemContent&) const = default;
};

/// aspect -> candidate id -> human score
using AspectScores = std::map<std::string, std::map<std::string, double>>;

struct EvalItem {
  ItemContent content;
  AspectScores aspect_scores;

  const std::string& id() const { return content.id; }
  bool operator==(const EvalItem&) const = default;
};

/// An ordered pair: `first` is shown in slot A, `second` in slot B.
struct PairTask {
  std::string item_id;
  std::string first;
  std::string second;
  std::int64_t seed_index = 0;

  PairTask swapped() const { return {item_id, second, first, seed_index}; }
  bool operator==(const PairTask&) const = default;
};

struct AspectSpec {
  std::string name;
  Instruction seed_instruction;
  std::vector<std::string> verbalizer{"A", "B"};

  bool operator==(const AspectSpec&) const = default;
};

/// Score-free view of a dataset. The optimizer only ever receives this type.
struct UnlabeledDataset {
  std::string name;
  std::vector<ItemContent> items;
  std::vector<AspectSpec> aspects;

  const ItemContent& item(const std::string& item_id) const;
  const AspectSpec& aspect(const std::string& name) const;
  /// Number of ordered candidate pairs across all items: sum of n*(n-1).
  std::size_t ordered_pair_count() const;
};

struct Dataset {
  std::string name;
  std::vector<EvalItem> items;
  std::vector<AspectSpec> aspects;

  UnlabeledDataset unlabeled() const;
  const EvalItem& item(const std::string& item_id) const;
  const AspectSpec& aspect(const std::string& name) const;
  bool has_scores(const std::string& aspect) const;
  std::size_t ordered_pair_count() const;
};

/// Checks every Dataset invariant; throws ValidationError naming the problem.
void validate(const Dataset& dataset);

Dataset dataset_from_json(const nlohmann::json& doc);
nlohmann::json dataset_to_json(const Dataset& dataset);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// All ordered pairs (i, j), i != j, in candidate order: i major, j minor.
std::vector<PairTask> enumerate_pairs(const ItemContent& item);

nlohmann::json to_json(const Instruction& instruction);
Instruction instruction_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PairTask& pair);
PairTask pair_from_json(const nlohmann::json& j);

}  // namespace fairjudge

#endif  // FAIRJUDGE_MODEL_HPP_

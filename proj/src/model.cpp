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

#include "fairjudge/model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fairjudge/error.hpp"

namespace fairjudge {

using json = nlohmann::json;

namespace {

const json& require(const json& obj, const std::string& key,
                    const std::string& where) {
  if (!obj.is_object()) {
    throw ValidationError("dataset: '" + where + "' must be an object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError("dataset: missing field '" + where + "." + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const std::string& key,
                           const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) {
    throw ValidationError("dataset: field '" + where + "." + key +
                          "' must be a string");
  }
  return v.get<std::string>();
}

const json& require_array(const json& obj, const std::string& key,
                          const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_array()) {
    throw ValidationError("dataset: field '" + where + "." + key +
                          "' must be an array");
  }
  return v;
}

template <typename Range, typename Key>
void check_unique(const Range& range, Key key, const std::string& what) {
  std::set<std::string> seen;
  for (const auto& x : range) {
    if (!seen.insert(key(x)).second) {
      throw ValidationError("duplicate " + what + " id '" + key(x) + "'");
    }
  }
}

}  // namespace

void validate(const Instruction& instruction) {
  if (instruction.text.empty()) {
    throw ValidationError("instruction '" + instruction.id + "' has empty text");
  }
}

const Candidate& ItemContent::candidate(const std::string& candidate_id) const {
  for (const auto& c : candidates) {
    if (c.id == candidate_id) return c;
  }
  throw PreconditionError("item '" + id + "' has no candidate '" +
                          candidate_id + "'");
}

bool ItemContent::has_candidate(const std::string& candidate_id) const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [&](const Candidate& c) { return c.id == candidate_id; });
}

const ItemContent& UnlabeledDataset::item(const std::string& item_id) const {
  for (const auto& it : items) {
    if (it.id == item_id) return it;
  }
  throw PreconditionError("unknown item '" + item_id + "'");
}

const AspectSpec& UnlabeledDataset::aspect(const std::string& aspect_name) const {
  for (const auto& a : aspects) {
    if (a.name == aspect_name) return a;
  }
  throw PreconditionError("unknown aspect '" + aspect_name + "'");
}

std::size_t UnlabeledDataset::ordered_pair_count() const {
  std::size_t n = 0;
  for (const auto& it : items) {
    n += it.candidates.size() * (it.candidates.size() - 1);
  }
  return n;
}

UnlabeledDataset Dataset::unlabeled() const {
  UnlabeledDataset out;
  out.name = name;
  out.aspects = aspects;
  out.items.reserve(items.size());
  for (const auto& it : items) out.items.push_back(it.content);
  return out;
}

const EvalItem& Dataset::item(const std::string& item_id) const {
  for (const auto& it : items) {
    if (it.id() == item_id) return it;
  }
  throw PreconditionError("unknown item '" + item_id + "'");
}

const AspectSpec& Dataset::aspect(const std::string& aspect_name) const {
  for (const auto& a : aspects) {
    if (a.name == aspect_name) return a;
  }
  throw PreconditionError("unknown aspect '" + aspect_name + "'");
}

bool Dataset::has_scores(const std::string& aspect_name) const {
  if (items.empty()) return false;
  return std::all_of(items.begin(), items.end(), [&](const EvalItem& it) {
    return it.aspect_scores.count(aspect_name) > 0;
  });
}

std::size_t Dataset::ordered_pair_count() const {
  std::size_t n = 0;
  for (const auto& it : items) {
    const auto c = it.content.candidates.size();
    n += c * (c - 1);
  }
  return n;
}

void validate(const Dataset& dataset) {
  check_unique(dataset.items, [](const EvalItem& it) { return it.id(); }, "item");
  check_unique(dataset.aspects, [](const AspectSpec& a) { return a.name; },
               "aspect");
  for (const auto& aspect : dataset.aspects) {
    validate(aspect.seed_instruction);
    if (aspect.verbalizer.size() < 2) {
      throw ValidationError("aspect '" + aspect.name +
                            "': verbalizer needs >=2 labels");
    }
    std::set<std::string> labels(aspect.verbalizer.begin(),
                                 aspect.verbalizer.end());
    if (labels.size() != aspect.verbalizer.size()) {
      throw ValidationError("aspect '" + aspect.name +
                            "': verbalizer labels must be distinct");
    }
    for (const auto& l : aspect.verbalizer) {
      if (l.empty() || l.find_first_of(" \t\n") != std::string::npos) {
        throw ValidationError("aspect '" + aspect.name + "': verbalizer label '" +
                              l + "' is not a single token");
      }
    }
  }
  for (const auto& item : dataset.items) {
    const auto& content = item.content;
    if (content.candidates.size() < 2) {
      throw ValidationError("item '" + content.id +
                            "': >=2 candidates required");
    }
    check_unique(content.candidates, [](const Candidate& c) { return c.id; },
                 "candidate (item '" + content.id + "')");
    for (const auto& c : content.candidates) {
      if (c.text.empty()) {
        throw ValidationError("item '" + content.id + "', candidate '" + c.id +
                              "': text is empty");
      }
    }
    for (const auto& [aspect, scores] : item.aspect_scores) {
      if (scores.size() != content.candidates.size()) {
        throw ValidationError("item '" + content.id + "', aspect '" + aspect +
                              "': scores must cover every candidate");
      }
      for (const auto& [cid, _] : scores) {
        if (!content.has_candidate(cid)) {
          throw ValidationError("item '" + content.id + "', aspect '" + aspect +
                                "': unknown candidate '" + cid + "'");
        }
      }
    }
  }
}

nlohmann::json to_json(const Instruction& instruction) {
  json j{{"id", instruction.id},
         {"text", instruction.text},
         {"aspect", instruction.aspect},
         {"epoch", instruction.epoch}};
  j["parent_id"] = instruction.parent_id ? json(*instruction.parent_id) : json();
  return j;
}

Instruction instruction_from_json(const nlohmann::json& j) {
  Instruction out;
  out.id = require_string(j, "id", "instruction");
  out.text = require_string(j, "text", "instruction");
  out.aspect = j.value("aspect", std::string{});
  out.epoch = j.value("epoch", 0);
  if (auto it = j.find("parent_id"); it != j.end() && it->is_string()) {
    out.parent_id = it->get<std::string>();
  }
  return out;
}

nlohmann::json to_json(const PairTask& pair) {
  return json{{"item_id", pair.item_id},
              {"first", pair.first},
              {"second", pair.second},
              {"seed_index", pair.seed_index}};
}

PairTask pair_from_json(const nlohmann::json& j) {
  return PairTask{require_string(j, "item_id", "pair"),
                  require_string(j, "first", "pair"),
                  require_string(j, "second", "pair"),
                  j.value("seed_index", std::int64_t{0})};
}

Dataset dataset_from_json(const nlohmann::json& doc) {
  Dataset ds;
  ds.name = require_string(doc, "name", "dataset");

  const json& aspects = require_array(doc, "aspects", "dataset");
  for (std::size_t a = 0; a < aspects.size(); ++a) {
    const std::string where = "aspects[" + std::to_string(a) + "]";
    AspectSpec spec;
    spec.name = require_string(aspects[a], "name", where);
    const json& seed = require(aspects[a], "seed_instruction", where);
    // A bare string is shorthand for {"id": "<aspect>-seed", "text": ...}.
    if (seed.is_string()) {
      spec.seed_instruction.id = spec.name + "-seed";
      spec.seed_instruction.text = seed.get<std::string>();
    } else {
      spec.seed_instruction.id = seed.value("id", spec.name + "-seed");
      spec.seed_instruction.text =
          require_string(seed, "text", where + ".seed_instruction");
    }
    spec.seed_instruction.aspect = spec.name;
    if (auto it = aspects[a].find("verbalizer"); it != aspects[a].end()) {
      if (!it->is_array()) {
        throw ValidationError("dataset: field '" + where +
                              ".verbalizer' must be an array");
      }
      spec.verbalizer.clear();
      for (const auto& l : *it) {
        if (!l.is_string()) {
          throw ValidationError("dataset: field '" + where +
                                ".verbalizer' must hold strings");
        }
        spec.verbalizer.push_back(l.get<std::string>());
      }
    }
    ds.aspects.push_back(std::move(spec));
  }

  const json& items = require_array(doc, "items", "dataset");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string where = "items[" + std::to_string(i) + "]";
    EvalItem item;
    item.content.id = require_string(items[i], "id", where);
    item.content.source_text = require_string(items[i], "source_text", where);
    const json& cands = require_array(items[i], "candidates", where);
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const std::string cw = where + ".candidates[" + std::to_string(c) + "]";
      item.content.candidates.push_back(
          Candidate{require_string(cands[c], "id", cw),
                    require_string(cands[c], "text", cw)});
    }
    if (auto it = items[i].find("aspect_scores"); it != items[i].end()) {
      if (!it->is_object()) {
        throw ValidationError("dataset: field '" + where +
                              ".aspect_scores' must be an object");
      }
      for (const auto& [aspect, scores] : it->items()) {
        const std::string sw = where + ".aspect_scores." + aspect;
        if (!scores.is_object()) {
          throw ValidationError("dataset: field '" + sw + "' must be an object");
        }
        auto& dst = item.aspect_scores[aspect];
        for (const auto& [cid, v] : scores.items()) {
          if (!v.is_number()) {
            throw ValidationError("dataset: field '" + sw + "." + cid +
                                  "' must be a number");
          }
          dst[cid] = v.get<double>();
        }
      }
    }
    ds.items.push_back(std::move(item));
  }

  validate(ds);
  return ds;
}

nlohmann::json dataset_to_json(const Dataset& dataset) {
  json aspects = json::array();
  for (const auto& a : dataset.aspects) {
    aspects.push_back({{"name", a.name},
                       {"seed_instruction",
                        {{"id", a.seed_instruction.id},
                         {"text", a.seed_instruction.text}}},
                       {"verbalizer", a.verbalizer}});
  }
  json items = json::array();
  for (const auto& it : dataset.items) {
    json cands = json::array();
    for (const auto& c : it.content.candidates) {
      cands.push_back({{"id", c.id}, {"text", c.text}});
    }
    json item{{"id", it.content.id},
              {"source_text", it.content.source_text},
              {"candidates", std::move(cands)}};
    if (!it.aspect_scores.empty()) item["aspect_scores"] = it.aspect_scores;
    items.push_back(std::move(item));
  }
  return json{{"name", dataset.name},
              {"aspects", std::move(aspects)},
              {"items", std::move(items)}};
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open dataset file '" + path.string() + "'");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("dataset '" + path.string() + "': " + e.what());
  }
  return dataset_from_json(doc);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot write dataset file '" + path.string() + "'");
  }
  out << dataset_to_json(dataset).dump(2) << '\n';
}

std::vector<PairTask> enumerate_pairs(const ItemContent& item) {
  std::vector<PairTask> pairs;
  const auto n = item.candidates.size();
  pairs.reserve(n * (n > 0 ? n - 1 : 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      pairs.push_back(PairTask{item.id, item.candidates[i].id,
                               item.candidates[j].id,
                               static_cast<std::int64_t>(pairs.size())});
    }
  }
  return pairs;
}

}  // namespace fairjudge

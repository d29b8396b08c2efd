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

// Prompt templates with [SLOT] markers.
//
// Canonical bodies are compiled in and shipped verbatim under data/templates/.
// A template file's single trailing newline is not part of the body.

#ifndef FAIRJUDGE_TEMPLATES_HPP_
#define FAIRJUDGE_TEMPLATES_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairjudge/model.hpp"

namespace fairjudge {

enum class TemplateKind { kSummarization, kDialog, kPointwise, kParaphrase };

std::string to_string(TemplateKind kind);
TemplateKind template_kind_from_string(std::string_view name);

/// Slot names (without brackets) a template of `kind` must contain once each.
const std::vector<std::string>& required_slots(TemplateKind kind);

/// A body split into literal text and slot references.
class SlotTemplate {
 public:
  SlotTemplate(TemplateKind kind, std::string body);

  TemplateKind kind() const { return kind_; }
  const std::string& body() const { return body_; }

  /// Single-pass substitution: values are never rescanned for markers.
  std::string render(const std::map<std::string, std::string>& values) const;

  /// Inverse of render: recovers slot values from a rendered string, or
  /// nullopt if the literals do not line up.
  std::optional<std::map<std::string, std::string>> match(std::string_view rendered) const;

  bool operator==(const SlotTemplate& other) const {
    return kind_ == other.kind_ && body_ == other.body_;
  }

 private:
  struct Segment {
    bool is_slot;
    std::string text;  // literal text, or slot name
  };
  TemplateKind kind_;
  std::string body_;
  std::vector<Segment> segments_;
};

/// Pairwise comparison template (summarization or dialog).
using PromptTemplate = SlotTemplate;

PromptTemplate canonical_template(TemplateKind kind);
PromptTemplate load_template(const std::filesystem::path& path, TemplateKind kind);

/// Fills a pairwise template: slot A carries pair.first, slot B pair.second.
std::string render_pairwise_prompt(const ItemContent& item, const PairTask& pair,
                                   const Instruction& instruction,
                                   const PromptTemplate& tmpl);

/// The same template with every content slot replaced by "[N/A]".
std::string render_content_free_prompt(const Instruction& instruction,
                                       const PromptTemplate& tmpl);

/// Single-candidate scoring prompt for the pointwise baselines.
std::string render_pointwise_prompt(const ItemContent& item,
                                    const Candidate& candidate,
                                    const Instruction& instruction);

/// Request text sent to the paraphraser for `incumbent`.
std::string render_paraphrase_prompt(const Instruction& incumbent,
                                     const std::string& aspect);

inline constexpr std::string_view kContentFree = "[N/A]";

}  // namespace fairjudge

#endif  // FAIRJUDGE_TEMPLATES_HPP_

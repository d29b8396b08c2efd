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

#include "fairjudge/templates.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fairjudge/error.hpp"

namespace fairjudge {

namespace {

constexpr std::string_view kSummarizationBody =
    "Source text: [SOURCE_TEXT]\n"
    "\n"
    "Summary A: [SUMMARY_1]\n"
    "\n"
    "Summary B: [SUMMARY_2]\n"
    "\n"
    "Question: [INSTRUCTION]\n"
    "Answer:";

constexpr std::string_view kDialogBody =
    "Dialog history: [DIALOG_HISTORY]\n"
    "\n"
    "Response Candidate A: [RESPONSE_1]\n"
    "\n"
    "Response Candidate B: [RESPONSE_2]\n"
    "\n"
    "Question: [INSTRUCTION]\n"
    "Answer:";

constexpr std::string_view kPointwiseBody =
    "Source text: [SOURCE_TEXT]\n"
    "\n"
    "Summary: [SUMMARY]\n"
    "\n"
    "Question: [INSTRUCTION] Rate the summary with an integer score from 1 to 5.\n"
    "Answer:";

// Trailing spaces are part of the optimizer prompt.
constexpr std::string_view kParaphraseBody =
    "Paraphrase the following instruction \n"
    "for a pairwise comparison task. \n"
    "Do not change the keyword \"[ASPECT]\". \n"
    "Be diverse and creative in paraphrasing. \n"
    "Return the instruction only. \n"
    "\n"
    "Input: [INSTRUCTION]\n"
    "\n"
    "Output:";

const std::set<std::string>& known_slots() {
  static const std::set<std::string> slots{
      "SOURCE_TEXT", "SUMMARY_1",  "SUMMARY_2", "DIALOG_HISTORY", "RESPONSE_1",
      "RESPONSE_2",  "INSTRUCTION", "SUMMARY",  "ASPECT"};
  return slots;
}

struct PairwiseSlots {
  const char* source;
  const char* first;
  const char* second;
};

PairwiseSlots pairwise_slots(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kSummarization:
      return {"SOURCE_TEXT", "SUMMARY_1", "SUMMARY_2"};
    case TemplateKind::kDialog:
      return {"DIALOG_HISTORY", "RESPONSE_1", "RESPONSE_2"};
    default:
      throw RenderError("template kind '" + to_string(kind) + "' is not pairwise");
  }
}

}  // namespace

std::string to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kSummarization: return "summarization";
    case TemplateKind::kDialog: return "dialog";
    case TemplateKind::kPointwise: return "pointwise";
    case TemplateKind::kParaphrase: return "paraphrase";
  }
  return "unknown";
}

TemplateKind template_kind_from_string(std::string_view name) {
  if (name == "summarization") return TemplateKind::kSummarization;
  if (name == "dialog") return TemplateKind::kDialog;
  if (name == "pointwise") return TemplateKind::kPointwise;
  if (name == "paraphrase") return TemplateKind::kParaphrase;
  throw ValidationError("unknown template kind '" + std::string(name) + "'");
}

const std::vector<std::string>& required_slots(TemplateKind kind) {
  static const std::vector<std::string> summarization{"SOURCE_TEXT", "SUMMARY_1",
                                                      "SUMMARY_2", "INSTRUCTION"};
  static const std::vector<std::string> dialog{"DIALOG_HISTORY", "RESPONSE_1",
                                               "RESPONSE_2", "INSTRUCTION"};
  static const std::vector<std::string> pointwise{"SOURCE_TEXT", "SUMMARY",
                                                  "INSTRUCTION"};
  static const std::vector<std::string> paraphrase{"ASPECT", "INSTRUCTION"};
  switch (kind) {
    case TemplateKind::kSummarization: return summarization;
    case TemplateKind::kDialog: return dialog;
    case TemplateKind::kPointwise: return pointwise;
    case TemplateKind::kParaphrase: return paraphrase;
  }
  return summarization;
}

SlotTemplate::SlotTemplate(TemplateKind kind, std::string body)
    : kind_(kind), body_(std::move(body)) {
  std::string literal;
  std::size_t pos = 0;
  while (pos < body_.size()) {
    if (body_[pos] == '[') {
      const auto close = body_.find(']', pos);
      if (close != std::string::npos) {
        std::string name = body_.substr(pos + 1, close - pos - 1);
        if (known_slots().count(name)) {
          segments_.push_back({false, std::move(literal)});
          literal.clear();
          segments_.push_back({true, std::move(name)});
          pos = close + 1;
          continue;
        }
      }
    }
    literal.push_back(body_[pos++]);
  }
  segments_.push_back({false, std::move(literal)});

  std::map<std::string, int> counts;
  for (const auto& s : segments_) {
    if (s.is_slot) ++counts[s.text];
  }
  const auto& required = required_slots(kind_);
  for (const auto& slot : required) {
    if (counts[slot] != 1) {
      throw ValidationError(to_string(kind_) + " template: slot [" + slot +
                            "] must appear exactly once");
    }
  }
  for (const auto& [slot, n] : counts) {
    if (n > 0 && std::find(required.begin(), required.end(), slot) == required.end()) {
      throw ValidationError(to_string(kind_) + " template: unexpected slot [" + slot + "]");
    }
  }
}

std::string SlotTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(body_.size() + 256);
  for (const auto& s : segments_) {
    if (!s.is_slot) {
      out += s.text;
      continue;
    }
    auto it = values.find(s.text);
    if (it == values.end()) {
      throw RenderError("no value for slot [" + s.text + "]");
    }
    out += it->second;
  }
  return out;
}

std::optional<std::map<std::string, std::string>> SlotTemplate::match(
    std::string_view rendered) const {
  // segments_ alternates literal, slot, literal, ..., literal.
  const std::string& head = segments_.front().text;
  const std::string& tail = segments_.back().text;
  if (rendered.size() < head.size() + tail.size() || !rendered.starts_with(head) ||
      !rendered.ends_with(tail)) {
    return std::nullopt;
  }
  std::map<std::string, std::string> values;
  std::size_t pos = head.size();
  const std::size_t end = rendered.size() - tail.size();
  for (std::size_t i = 1; i + 1 < segments_.size(); i += 2) {
    const std::string& slot = segments_[i].text;
    const bool last = i + 2 == segments_.size();
    if (last) {
      if (pos > end) return std::nullopt;
      values[slot] = std::string(rendered.substr(pos, end - pos));
      break;
    }
    const std::string& next_literal = segments_[i + 1].text;
    if (next_literal.empty()) return std::nullopt;
    const auto found = rendered.find(next_literal, pos);
    if (found == std::string_view::npos || found > end) return std::nullopt;
    values[slot] = std::string(rendered.substr(pos, found - pos));
    pos = found + next_literal.size();
  }
  return values;
}

PromptTemplate canonical_template(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kSummarization:
      return PromptTemplate(kind, std::string(kSummarizationBody));
    case TemplateKind::kDialog:
      return PromptTemplate(kind, std::string(kDialogBody));
    case TemplateKind::kPointwise:
      return PromptTemplate(kind, std::string(kPointwiseBody));
    case TemplateKind::kParaphrase:
      return PromptTemplate(kind, std::string(kParaphraseBody));
  }
  throw ValidationError("unknown template kind");
}

PromptTemplate load_template(const std::filesystem::path& path, TemplateKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open template file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string body = buf.str();
  if (body.ends_with("\r\n")) {
    body.resize(body.size() - 2);
  } else if (body.ends_with('\n')) {
    body.pop_back();
  }
  return PromptTemplate(kind, std::move(body));
}

std::string render_pairwise_prompt(const ItemContent& item, const PairTask& pair,
                                   const Instruction& instruction,
                                   const PromptTemplate& tmpl) {
  if (pair.item_id != item.id) {
    throw RenderError("pair belongs to item '" + pair.item_id + "', not '" + item.id + "'");
  }
  if (pair.first == pair.second) {
    throw RenderError("pair compares candidate '" + pair.first + "' with itself");
  }
  const auto slots = pairwise_slots(tmpl.kind());
  const Candidate* first = nullptr;
  const Candidate* second = nullptr;
  for (const auto& c : item.candidates) {
    if (c.id == pair.first) first = &c;
    if (c.id == pair.second) second = &c;
  }
  if (!first || !second) {
    throw RenderError("item '" + item.id + "' lacks candidate '" +
                      (first ? pair.second : pair.first) + "'");
  }
  return tmpl.render({{slots.source, item.source_text},
                      {slots.first, first->text},
                      {slots.second, second->text},
                      {"INSTRUCTION", instruction.text}});
}

std::string render_content_free_prompt(const Instruction& instruction,
                                       const PromptTemplate& tmpl) {
  const auto slots = pairwise_slots(tmpl.kind());
  const std::string na(kContentFree);
  return tmpl.render({{slots.source, na},
                      {slots.first, na},
                      {slots.second, na},
                      {"INSTRUCTION", instruction.text}});
}

std::string render_pointwise_prompt(const ItemContent& item,
                                    const Candidate& candidate,
                                    const Instruction& instruction) {
  static const PromptTemplate tmpl = canonical_template(TemplateKind::kPointwise);
  return tmpl.render({{"SOURCE_TEXT", item.source_text},
                      {"SUMMARY", candidate.text},
                      {"INSTRUCTION", instruction.text}});
}

std::string render_paraphrase_prompt(const Instruction& incumbent,
                                     const std::string& aspect) {
  static const PromptTemplate tmpl = canonical_template(TemplateKind::kParaphrase);
  return tmpl.render({{"ASPECT", aspect}, {"INSTRUCTION", incumbent.text}});
}

}  // namespace fairjudge

// Copyright 2026 The iclbias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <array>
#include <sstream>
#include <utility>
#include <vector>

#include "iclbias/error.h"
#include "iclbias/prompt.h"

namespace iclbias {
namespace internal {
const std::vector<std::pair<std::string, std::string>>& EmbeddedTemplates();
}  // namespace internal

namespace {

constexpr std::array<std::pair<TemplateId, const char*>, 4> kNames = {{
    {TemplateId::kUnconstrained, "unconstrained"},
    {TemplateId::kBalanced, "balanced"},
    {TemplateId::kIntersectionalBalanced, "intersectional_balanced"},
    {TemplateId::kNoMirroring, "no_mirroring"},
}};

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::size_t CountOccurrences(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos;
       pos = s.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

const char* TemplateIdName(TemplateId id) {
  for (const auto& [k, name] : kNames) {
    if (k == id) return name;
  }
  return "unknown";
}

TemplateId ParseTemplateId(const std::string& name) {
  for (const auto& [k, n] : kNames) {
    if (name == n) return k;
  }
  Fail(ErrorCode::kConfig, "unknown template id '" + name + "'");
}

int SamplesPerCall(TemplateId id) {
  return id == TemplateId::kIntersectionalBalanced ? 4 : 2;
}

PromptTemplate ParseTemplate(TemplateId id, const std::string& text) {
  PromptTemplate tpl;
  tpl.id = id;
  std::string* current = nullptr;
  std::istringstream in(text);
  std::string line;
  bool seen[3] = {false, false, false};
  while (std::getline(in, line)) {
    const std::string t = Trim(line);
    int section = -1;
    if (t == "[role]") section = 0;
    if (t == "[instructions]") section = 1;
    if (t == "[contract]") section = 2;
    if (section >= 0) {
      if (seen[section]) Fail(ErrorCode::kParse, "template: duplicate section " + t);
      seen[section] = true;
      current = section == 0   ? &tpl.role_text
                : section == 1 ? &tpl.instruction_text
                               : &tpl.contract_text;
      continue;
    }
    if (current == nullptr) {
      if (t.empty()) continue;
      Fail(ErrorCode::kParse, "template: text before the first section");
    }
    *current += line;
    *current += '\n';
  }
  if (!seen[0] || !seen[1] || !seen[2]) {
    Fail(ErrorCode::kParse, "template: needs [role], [instructions] and [contract]");
  }
  tpl.role_text = Trim(tpl.role_text);
  tpl.instruction_text = Trim(tpl.instruction_text);
  tpl.contract_text = Trim(tpl.contract_text);
  const std::size_t n = CountOccurrences(tpl.role_text, "{icl_examples}") +
                        CountOccurrences(tpl.instruction_text, "{icl_examples}") +
                        CountOccurrences(tpl.contract_text, "{icl_examples}");
  if (n != 1 || CountOccurrences(tpl.instruction_text, "{icl_examples}") != 1) {
    Fail(ErrorCode::kParse,
         "template: {icl_examples} must appear exactly once, in [instructions]");
  }
  return tpl;
}

const std::string& BuiltinTemplateText(TemplateId id) {
  const std::string name = TemplateIdName(id);
  for (const auto& [n, body] : internal::EmbeddedTemplates()) {
    if (n == name) return body;
  }
  Fail(ErrorCode::kConfig, "no embedded template for '" + name + "'");
}

PromptTemplate BuiltinTemplate(TemplateId id) {
  return ParseTemplate(id, BuiltinTemplateText(id));
}

bool RefreshPolicy(std::size_t call_index, int period) {
  if (period < 1) Fail(ErrorCode::kInvalidArgument, "refresh period must be >= 1");
  return call_index % static_cast<std::size_t>(period) == 0;
}

}  // namespace iclbias

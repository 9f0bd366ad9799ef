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

#include <cmath>
#include <map>

#include "iclbias/error.h"
#include "iclbias/format.h"
#include "iclbias/prompt.h"
#include "json.hpp"

namespace iclbias {
namespace {

using Json = nlohmann::ordered_json;

Json RecordToJson(const Record& r, const Schema& schema) {
  Json obj = Json::object();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& f = schema.feature(j);
    if (f.is_categorical()) {
      obj[f.name] = r.cat(j);
    } else if (f.integral) {
      obj[f.name] = static_cast<long long>(std::llround(r.num(j)));
    } else {
      obj[f.name] = r.num(j);
    }
  }
  obj[schema.label().name] = r.label;
  return obj;
}

std::string CountWord(int n) {
  static const char* kWords[] = {"zero", "one", "two",   "three", "four",
                                 "five", "six", "seven", "eight", "nine", "ten"};
  if (n >= 0 && n <= 10) return kWords[n];
  return std::to_string(n);
}

std::string KeyContract(const Schema& schema) {
  std::string out = "{\n";
  auto type_of = [](const FeatureSpec& f) {
    if (f.is_categorical()) return "string";
    return f.integral ? "int" : "float";
  };
  for (const auto& f : schema.features()) {
    out += Json(f.name).dump() + ": \"" + type_of(f) + "\",\n";
  }
  out += Json(schema.label().name).dump() + ": \"string\"\n}";
  return out;
}

std::string OutputExample(int n) {
  std::string out = "[\n";
  for (int i = 1; i <= n; ++i) {
    out += "  {example " + std::to_string(i) + "}";
    out += i < n ? ",\n" : "\n";
  }
  return out + "]";
}

std::string CellList(const std::vector<std::vector<Conjunct>>& cells) {
  std::string out;
  for (const auto& cell : cells) {
    out += "- (";
    for (std::size_t i = 0; i < cell.size(); ++i) {
      const auto& c = cell[i];
      if (i) out += ", ";
      out += Json(c.feature).dump() + ": ";
      if (c.equals) {
        out += Json(*c.equals).dump();
      } else {
        out += "\"" + FormatDouble(c.interval->first) + "-" +
               FormatDouble(c.interval->second) + "\"";
      }
    }
    out += ")\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

// Single left-to-right pass, so substituted text is never rescanned and
// unknown braces survive untouched.
std::string Substitute(const std::string& text,
                       const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i + 1);
      if (close != std::string::npos) {
        auto it = values.find(text.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

}  // namespace

std::string SerializeExamples(const std::vector<Record>& examples,
                              const Schema& schema, bool pretty) {
  if (!pretty) {
    Json arr = Json::array();
    for (const auto& r : examples) arr.push_back(RecordToJson(r, schema));
    return arr.dump();
  }
  if (examples.empty()) return "[]";
  std::string out = "[\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out += "  " + RecordToJson(examples[i], schema).dump();
    out += i + 1 < examples.size() ? ",\n" : "\n";
  }
  return out + "]";
}

PromptBundle ComposePrompt(const PromptTemplate& tpl,
                           const std::vector<Record>& examples,
                           const Schema& schema, const TemplateContext& context,
                           std::size_t refresh_counter) {
  PromptBundle b;
  b.template_id = tpl.id;
  b.examples = examples;
  b.k = static_cast<int>(examples.size());
  b.samples_per_call = SamplesPerCall(tpl.id);
  b.refresh_counter = refresh_counter;
  if (tpl.id == TemplateId::kIntersectionalBalanced && !context.cells.empty()) {
    b.samples_per_call = static_cast<int>(context.cells.size());
  }

  const std::map<std::string, std::string> values = {
      {"icl_examples", SerializeExamples(examples, schema)},
      {"domain", context.domain},
      {"count_word", CountWord(b.samples_per_call)},
      {"key_contract", KeyContract(schema)},
      {"output_example", OutputExample(b.samples_per_call)},
      {"unprivileged", context.unprivileged_name},
      {"privileged", context.privileged_name},
      {"cell_list", CellList(context.cells)},
  };
  b.system_text = Substitute(tpl.role_text, values);
  b.user_text = Substitute(tpl.instruction_text, values) + "\n\n" +
                Substitute(tpl.contract_text, values);
  b.rendered = "System role:\n" + b.system_text + "\nUser instructions:\n" +
               b.user_text + "\n";
  return b;
}

}  // namespace iclbias

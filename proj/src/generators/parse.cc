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

#include "iclbias/error.h"
#include "iclbias/format.h"
#include "iclbias/generators.h"
#include "json.hpp"

namespace iclbias {
namespace {

using Json = nlohmann::ordered_json;

// Returns an error string, empty on success.
std::string ParseRow(const Json& obj, const Schema& schema, Record& out) {
  if (!obj.is_object()) return "element is not an object";
  std::vector<std::string> keys;
  for (auto it = obj.begin(); it != obj.end(); ++it) keys.push_back(it.key());
  std::vector<std::string> want;
  for (const auto& f : schema.features()) want.push_back(f.name);
  want.push_back(schema.label().name);
  if (keys != want) {
    for (std::size_t i = 0; i < std::max(keys.size(), want.size()); ++i) {
      if (i >= keys.size()) return "key contract: missing key '" + want[i] + "'";
      if (i >= want.size()) return "key contract: extra key '" + keys[i] + "'";
      if (keys[i] != want[i]) {
        return "key contract: expected '" + want[i] + "' at position " +
               std::to_string(i) + ", got '" + keys[i] + "'";
      }
    }
  }
  auto as_category = [](const Json& v, std::string& s) {
    if (v.is_string()) {
      s = v.get<std::string>();
      return true;
    }
    // Models often emit bare integers for numeric-looking codes.
    if (v.is_number_integer()) {
      s = std::to_string(v.get<long long>());
      return true;
    }
    return false;
  };
  out.values.assign(schema.size(), Value{});
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& f = schema.feature(j);
    const Json& v = obj.at(f.name);
    if (f.is_categorical()) {
      std::string s;
      if (!as_category(v, s)) return "'" + f.name + "' is not a string";
      if (!f.category_index(s)) return "'" + f.name + "' value '" + s + "' not in support";
      out.values[j] = s;
    } else {
      if (!v.is_number()) return "'" + f.name + "' is not a number";
      const double x = v.get<double>();
      if (!std::isfinite(x) || x < f.min || x > f.max) {
        return "'" + f.name + "' value " + FormatDouble(x) + " out of range";
      }
      if (f.integral && x != std::floor(x)) return "'" + f.name + "' is not an integer";
      out.values[j] = x;
    }
  }
  std::string label;
  if (!as_category(obj.at(schema.label().name), label)) return "label is not a string";
  if (!schema.label().category_index(label)) return "label '" + label + "' not in support";
  out.label = label;
  return "";
}

}  // namespace

ParsedGeneration ParseGeneration(const std::string& text, const Schema& schema,
                                 int expected) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    Fail(ErrorCode::kParse, std::string("response is not a bare JSON value: ") + e.what());
  }
  if (!root.is_array()) Fail(ErrorCode::kParse, "response root is not a JSON array");
  if (static_cast<int>(root.size()) != expected) {
    Fail(ErrorCode::kParse, "expected " + std::to_string(expected) + " objects, got " +
                                std::to_string(root.size()));
  }
  ParsedGeneration out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    Record r;
    const std::string err = ParseRow(root[i], schema, r);
    if (err.empty()) {
      out.records.push_back(std::move(r));
    } else {
      out.row_errors.push_back("row " + std::to_string(i) + ": " + err);
    }
  }
  return out;
}

}  // namespace iclbias

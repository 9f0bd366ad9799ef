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

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "iclbias/data.h"
#include "iclbias/error.h"
#include "iclbias/format.h"
#include "json.hpp"

namespace iclbias {

using json = nlohmann::ordered_json;

FeatureSpec FeatureSpec::Categorical(std::string name,
                                     std::vector<std::string> support) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::kCategorical;
  f.support = std::move(support);
  return f;
}

FeatureSpec FeatureSpec::Numerical(std::string name, double min, double max,
                                   bool integral) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::kNumerical;
  f.min = min;
  f.max = max;
  f.integral = integral;
  return f;
}

std::optional<std::size_t> FeatureSpec::category_index(
    const std::string& value) const {
  auto it = std::find(support.begin(), support.end(), value);
  if (it == support.end()) return std::nullopt;
  return static_cast<std::size_t>(it - support.begin());
}

std::string ValueToString(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return FormatDouble(std::get<double>(v));
}

namespace {

void ValidateFeatureSpec(const FeatureSpec& f) {
  if (f.name.empty()) Fail(ErrorCode::kSchema, "feature with empty name");
  if (f.is_categorical()) {
    if (f.support.empty()) {
      Fail(ErrorCode::kSchema, "categorical feature '" + f.name +
                                   "' has an empty support");
    }
    std::set<std::string> seen(f.support.begin(), f.support.end());
    if (seen.size() != f.support.size()) {
      Fail(ErrorCode::kSchema,
           "categorical feature '" + f.name + "' has duplicate categories");
    }
  } else if (!(f.min <= f.max)) {
    Fail(ErrorCode::kSchema,
         "numerical feature '" + f.name + "' has min > max");
  }
}

}  // namespace

Schema::Schema(std::vector<FeatureSpec> features, FeatureSpec label,
               std::vector<std::string> protected_features,
               std::string protected_name)
    : features_(std::move(features)),
      label_(std::move(label)),
      protected_(std::move(protected_features)),
      protected_name_(std::move(protected_name)) {
  std::set<std::string> names;
  for (const auto& f : features_) {
    ValidateFeatureSpec(f);
    if (!names.insert(f.name).second) {
      Fail(ErrorCode::kSchema, "duplicate feature name '" + f.name + "'");
    }
  }
  ValidateFeatureSpec(label_);
  if (!label_.is_categorical()) {
    Fail(ErrorCode::kSchema, "label '" + label_.name + "' must be categorical");
  }
  if (names.count(label_.name)) {
    Fail(ErrorCode::kSchema,
         "label name '" + label_.name + "' collides with a feature");
  }
  for (const auto& p : protected_) {
    if (!names.count(p)) {
      Fail(ErrorCode::kSchema,
           "protected attribute '" + p + "' is not a declared feature");
    }
  }
  if (protected_name_.empty()) {
    for (std::size_t i = 0; i < protected_.size(); ++i) {
      if (i) protected_name_ += "&";
      protected_name_ += protected_[i];
    }
  }
}

std::optional<std::size_t> Schema::find(const std::string& name) const {
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (features_[j].name == name) return j;
  }
  return std::nullopt;
}

std::size_t Schema::index_of(const std::string& name) const {
  auto j = find(name);
  if (!j) Fail(ErrorCode::kSchema, "unknown feature '" + name + "'");
  return *j;
}

void Schema::Validate(const Record& r) const {
  if (r.values.size() != features_.size()) {
    Fail(ErrorCode::kSchema, "record has " + std::to_string(r.values.size()) +
                                 " values, schema has " +
                                 std::to_string(features_.size()));
  }
  for (std::size_t j = 0; j < features_.size(); ++j) {
    const auto& f = features_[j];
    if (f.is_categorical()) {
      const auto* s = std::get_if<std::string>(&r.values[j]);
      if (!s) Fail(ErrorCode::kSchema, "feature '" + f.name + "' expects a category");
      if (!f.category_index(*s)) {
        Fail(ErrorCode::kSchema, "value '" + *s + "' not in support of '" +
                                     f.name + "'");
      }
    } else {
      const auto* d = std::get_if<double>(&r.values[j]);
      if (!d) Fail(ErrorCode::kSchema, "feature '" + f.name + "' expects a number");
      if (!(*d >= f.min && *d <= f.max)) {
        Fail(ErrorCode::kSchema, "value " + FormatDouble(*d) +
                                     " outside range of '" + f.name + "'");
      }
    }
  }
  if (!label_.category_index(r.label)) {
    Fail(ErrorCode::kSchema,
         "label '" + r.label + "' not in support of '" + label_.name + "'");
  }
}

bool Schema::operator==(const Schema& o) const {
  auto same = [](const FeatureSpec& a, const FeatureSpec& b) {
    return a.name == b.name && a.kind == b.kind && a.support == b.support &&
           a.min == b.min && a.max == b.max && a.integral == b.integral;
  };
  if (features_.size() != o.features_.size()) return false;
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (!same(features_[j], o.features_[j])) return false;
  }
  return same(label_, o.label_) && protected_ == o.protected_;
}

namespace {

FeatureSpec FeatureFromJson(const json& j) {
  static const std::set<std::string> kKeys = {"name", "kind", "support",
                                              "range", "integer"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kKeys.count(it.key())) {
      Fail(ErrorCode::kSchema, "unknown feature key '" + it.key() + "'");
    }
  }
  const std::string name = j.at("name").get<std::string>();
  const std::string kind = j.value("kind", std::string("categorical"));
  if (kind == "categorical") {
    std::vector<std::string> support;
    for (const auto& v : j.at("support")) {
      support.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    return FeatureSpec::Categorical(name, std::move(support));
  }
  if (kind == "numerical") {
    const auto& r = j.at("range");
    if (!r.is_array() || r.size() != 2) {
      Fail(ErrorCode::kSchema, "range of '" + name + "' must be [min, max]");
    }
    return FeatureSpec::Numerical(name, r[0].get<double>(), r[1].get<double>(),
                                  j.value("integer", false));
  }
  Fail(ErrorCode::kSchema, "unknown feature kind '" + kind + "'");
}

json FeatureToJson(const FeatureSpec& f) {
  json j;
  j["name"] = f.name;
  if (f.is_categorical()) {
    j["kind"] = "categorical";
    j["support"] = f.support;
  } else {
    j["kind"] = "numerical";
    j["range"] = {f.min, f.max};
    if (f.integral) j["integer"] = true;
  }
  return j;
}

}  // namespace

Schema SchemaFromJson(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("schema JSON: ") + e.what());
  }
  try {
    std::vector<FeatureSpec> features;
    for (const auto& f : j.at("features")) features.push_back(FeatureFromJson(f));
    FeatureSpec label = FeatureFromJson(j.at("label"));
    std::vector<std::string> prot;
    std::string prot_name;
    if (j.contains("protected")) {
      const auto& p = j["protected"];
      if (p.is_string()) {
        prot.push_back(p.get<std::string>());
      } else {
        prot_name = p.value("name", std::string());
        for (const auto& f : p.at("features")) prot.push_back(f.get<std::string>());
      }
    }
    return Schema(std::move(features), std::move(label), std::move(prot),
                  std::move(prot_name));
  } catch (const json::exception& e) {
    Fail(ErrorCode::kSchema, std::string("schema JSON: ") + e.what());
  }
}

Schema LoadSchema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open schema file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return SchemaFromJson(ss.str());
}

std::string SchemaToJson(const Schema& schema) {
  json j;
  j["features"] = json::array();
  for (const auto& f : schema.features()) j["features"].push_back(FeatureToJson(f));
  j["label"] = FeatureToJson(schema.label());
  j["protected"] = {{"name", schema.protected_name()},
                    {"features", schema.protected_features()}};
  return j.dump(2);
}

}  // namespace iclbias

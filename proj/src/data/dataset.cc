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
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "iclbias/data.h"
#include "iclbias/error.h"
#include "iclbias/format.h"
#include "iclbias/random.h"

namespace iclbias {

std::string FormatDouble(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<double> ParseDouble(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

Conjunct Conjunct::Equals(std::string feature, std::string value) {
  Conjunct c;
  c.feature = std::move(feature);
  c.equals = std::move(value);
  return c;
}

Conjunct Conjunct::Within(std::string feature, double lo, double hi) {
  Conjunct c;
  c.feature = std::move(feature);
  c.interval = std::make_pair(lo, hi);
  return c;
}

void SubgroupSpec::Validate(const Schema& schema) const {
  if (unprivileged.empty()) {
    Fail(ErrorCode::kSchema, "subgroup spec has no conjuncts");
  }
  for (const auto& c : unprivileged) {
    const auto& f = schema.feature(schema.index_of(c.feature));
    if (c.equals.has_value() == c.interval.has_value()) {
      Fail(ErrorCode::kSchema, "conjunct on '" + c.feature +
                                   "' needs exactly one of value / interval");
    }
    if (c.interval) {
      if (f.is_categorical()) {
        Fail(ErrorCode::kSchema, "interval conjunct on categorical feature '" +
                                     c.feature + "'");
      }
      if (c.interval->first > c.interval->second) {
        Fail(ErrorCode::kSchema, "empty interval on '" + c.feature + "'");
      }
    } else if (f.is_categorical() && !f.category_index(*c.equals)) {
      Fail(ErrorCode::kSchema, "value '" + *c.equals + "' not in support of '" +
                                   c.feature + "'");
    } else if (!f.is_categorical() && !ParseDouble(*c.equals)) {
      Fail(ErrorCode::kSchema, "non-numeric value for '" + c.feature + "'");
    }
  }
  if (!schema.label().category_index(favorable_label)) {
    Fail(ErrorCode::kSchema,
         "favorable label '" + favorable_label + "' not in label support");
  }
}

bool MatchesConjuncts(const Schema& schema, const std::vector<Conjunct>& cs,
                      const Record& r) {
  for (const auto& c : cs) {
    const std::size_t j = schema.index_of(c.feature);
    const Value& v = r.values[j];
    if (c.interval) {
      const double x = std::get<double>(v);
      if (x < c.interval->first || x > c.interval->second) return false;
    } else if (const auto* s = std::get_if<std::string>(&v)) {
      if (*s != *c.equals) return false;
    } else {
      if (std::get<double>(v) != *ParseDouble(*c.equals)) return false;
    }
  }
  return true;
}

bool SubgroupSpec::Matches(const Schema& schema, const Record& r) const {
  return MatchesConjuncts(schema, unprivileged, r);
}

std::vector<std::string> SubgroupSpec::features() const {
  std::vector<std::string> out;
  for (const auto& c : unprivileged) {
    if (std::find(out.begin(), out.end(), c.feature) == out.end()) {
      out.push_back(c.feature);
    }
  }
  return out;
}

std::string SubgroupSpec::Describe() const {
  std::string out;
  for (const auto& c : unprivileged) {
    if (!out.empty()) out += " & ";
    if (c.interval) {
      out += c.feature + " in [" + FormatDouble(c.interval->first) + ", " +
             FormatDouble(c.interval->second) + "]";
    } else {
      out += c.feature + "=" + *c.equals;
    }
  }
  return out;
}

const char* ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kReal: return "real";
    case Provenance::kSynthetic: return "synthetic";
    case Provenance::kPrompt: return "prompt";
    case Provenance::kAnchor: return "anchor";
  }
  return "unknown";
}

Dataset::Dataset(SchemaPtr schema, std::vector<Record> records,
                 Provenance provenance)
    : schema_(std::move(schema)),
      records_(std::move(records)),
      provenance_(provenance) {
  if (!schema_) Fail(ErrorCode::kInvalidArgument, "dataset without schema");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    try {
      schema_->Validate(records_[i]);
    } catch (const Error& e) {
      Fail(e.code(), "record " + std::to_string(i) + ": " + e.what());
    }
  }
}

Dataset Dataset::Select(const std::vector<std::size_t>& indices) const {
  std::vector<Record> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(records_.at(i));
  return Dataset(schema_, std::move(out), provenance_);
}

Dataset Dataset::Slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, records_.size());
  begin = std::min(begin, end);
  return Dataset(schema_,
                 std::vector<Record>(records_.begin() + begin,
                                     records_.begin() + end),
                 provenance_);
}

namespace {

// Splits one CSV line honoring double-quoted fields.
std::vector<std::string> SplitCsvLine(const std::string& line, std::size_t row) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  if (quoted) {
    Fail(ErrorCode::kParse, "row " + std::to_string(row) + ": unterminated quote");
  }
  out.push_back(std::move(cur));
  return out;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

Dataset ParseCsv(const std::string& text, SchemaPtr schema,
                 IngestOptions options, Provenance provenance) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kParse, "CSV has no header row");
  const auto header = SplitCsvLine(line, 0);
  const Schema& s = *schema;

  // Column position of each schema feature, then the label.
  std::vector<std::size_t> pos(s.size() + 1);
  auto locate = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      Fail(ErrorCode::kSchema, "missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  for (std::size_t j = 0; j < s.size(); ++j) pos[j] = locate(s.feature(j).name);
  pos[s.size()] = locate(s.label().name);
  if (header.size() != s.size() + 1) {
    Fail(ErrorCode::kSchema, "header has " + std::to_string(header.size()) +
                                 " columns, schema expects " +
                                 std::to_string(s.size() + 1));
  }

  std::vector<Record> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = SplitCsvLine(line, row);
    const std::string where = "row " + std::to_string(row);
    if (cells.size() != header.size()) {
      Fail(ErrorCode::kParse, where + ": expected " + std::to_string(header.size()) +
                                  " cells, got " + std::to_string(cells.size()));
    }
    Record r;
    r.values.reserve(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      const auto& f = s.feature(j);
      const std::string& cell = cells[pos[j]];
      const std::string col = where + ", column '" + f.name + "'";
      if (cell.empty()) Fail(ErrorCode::kParse, col + ": blank cell");
      if (f.is_categorical()) {
        if (!f.category_index(cell)) {
          Fail(ErrorCode::kSchema, col + ": category '" + cell + "' not in support");
        }
        r.values.emplace_back(cell);
      } else {
        auto v = ParseDouble(cell);
        if (!v) Fail(ErrorCode::kParse, col + ": unparseable number '" + cell + "'");
        if (*v < f.min || *v > f.max) {
          if (!options.clamp_numericals) {
            Fail(ErrorCode::kSchema, col + ": value " + cell + " outside [" +
                                         FormatDouble(f.min) + ", " +
                                         FormatDouble(f.max) + "]");
          }
          *v = std::clamp(*v, f.min, f.max);
        }
        r.values.emplace_back(*v);
      }
    }
    r.label = cells[pos[s.size()]];
    if (r.label.empty()) Fail(ErrorCode::kParse, where + ": blank label");
    if (!s.label().category_index(r.label)) {
      Fail(ErrorCode::kSchema, where + ", column '" + s.label().name +
                                   "': label '" + r.label + "' not in support");
    }
    records.push_back(std::move(r));
    ++row;
  }
  return Dataset(std::move(schema), std::move(records), provenance);
}

Dataset LoadDataset(const std::filesystem::path& path, SchemaPtr schema,
                    IngestOptions options) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseCsv(ss.str(), std::move(schema), options);
}

std::string ToCsv(const Dataset& ds) {
  const Schema& s = ds.schema();
  std::string out;
  for (std::size_t j = 0; j < s.size(); ++j) out += CsvField(s.feature(j).name) + ",";
  out += CsvField(s.label().name) + "\n";
  for (const auto& r : ds.records()) {
    for (const auto& v : r.values) out += CsvField(ValueToString(v)) + ",";
    out += CsvField(r.label) + "\n";
  }
  return out;
}

void WriteCsv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out << ToCsv(ds);
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

Split SplitDataset(const Dataset& ds, double train_fraction,
                   std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "train fraction must lie in (0, 1)");
  }
  if (ds.empty()) Fail(ErrorCode::kInvalidArgument, "cannot split an empty dataset");
  const std::size_t n = ds.size();
  std::size_t n_train = static_cast<std::size_t>(
      std::max<long>(1, RoundHalfUp(train_fraction * static_cast<double>(n))));
  n_train = std::min(n_train, n);
  Rng rng = MakeRng(seed, {0x5717});
  auto perm = SamplePrefix(rng, n, n);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + n_train);
  std::vector<std::size_t> test(perm.begin() + n_train, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return Split{ds.Select(train), ds.Select(test), train.empty() || test.empty()};
}

std::vector<std::size_t> SubgroupMask(const Dataset& ds,
                                      const SubgroupSpec& sub) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (sub.Matches(ds.schema(), ds[i])) out.push_back(i);
  }
  return out;
}

std::vector<std::uint8_t> SubgroupMembership(const Dataset& ds,
                                             const SubgroupSpec& sub) {
  std::vector<std::uint8_t> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out[i] = sub.Matches(ds.schema(), ds[i]) ? 1 : 0;
  }
  return out;
}

std::vector<double> NumericColumn(const Dataset& ds, std::size_t j) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records()) out.push_back(r.num(j));
  return out;
}

EmpiricalDistribution EmpiricalDistributionOf(const Dataset& ds,
                                              const std::string& feature) {
  if (ds.empty()) {
    Fail(ErrorCode::kInvalidArgument, "empirical distribution of empty dataset");
  }
  const Schema& s = ds.schema();
  const bool is_label = feature == s.label().name && !s.find(feature);
  if (is_label || s.feature(s.index_of(feature)).is_categorical()) {
    const FeatureSpec& f = is_label ? s.label() : s.feature(s.index_of(feature));
    std::vector<double> counts(f.support.size(), 0.0);
    const std::size_t j = is_label ? 0 : s.index_of(feature);
    for (const auto& r : ds.records()) {
      const std::string& v = is_label ? r.label : r.cat(j);
      counts[*f.category_index(v)] += 1.0;
    }
    return CategoricalDistribution::FromCounts(f.support, counts);
  }
  const auto col = NumericColumn(ds, s.index_of(feature));
  const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
  return BuildHistogram(col, EqualWidthEdges(*lo, *hi));
}

}  // namespace iclbias

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
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "iclbias/downstream.h"
#include "iclbias/error.h"
#include "iclbias/format.h"

namespace iclbias {

const char* ClassifierName(ClassifierKind k) {
  return k == ClassifierKind::kLogisticRegression ? "logistic_regression" : "random_forest";
}

ClassifierKind ParseClassifier(const std::string& name) {
  if (name == "logistic_regression" || name == "lr") return ClassifierKind::kLogisticRegression;
  if (name == "random_forest" || name == "rf") return ClassifierKind::kRandomForest;
  Fail(ErrorCode::kConfig, "unknown classifier '" + name + "'");
}

const char* PolicyName(FeaturePolicy p) {
  return p == FeaturePolicy::kAware ? "aware" : "blind";
}

FeaturePolicy ParsePolicy(const std::string& name) {
  if (name == "aware") return FeaturePolicy::kAware;
  if (name == "blind") return FeaturePolicy::kBlind;
  Fail(ErrorCode::kConfig, "unknown feature policy '" + name + "'");
}

Encoder Encoder::Fit(const Dataset& train, const std::vector<std::string>& excluded) {
  if (train.empty()) Fail(ErrorCode::kInvalidArgument, "cannot fit an encoder on no rows");
  const Schema& s = train.schema();
  Encoder enc;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto& f = s.feature(j);
    if (std::find(excluded.begin(), excluded.end(), f.name) != excluded.end()) continue;
    if (f.is_categorical()) {
      std::vector<std::uint8_t> seen(f.support.size(), 0);
      for (const auto& r : train.records()) seen[*f.category_index(r.cat(j))] = 1;
      for (std::size_t v = 0; v < f.support.size(); ++v) {
        if (seen[v]) enc.columns_.push_back({j, f.support[v], 0.0, 1.0});
      }
    } else {
      const auto col = NumericColumn(train, j);
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(col.size());
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(col.size()));
      enc.columns_.push_back({j, "", mean, sd > 0.0 ? sd : 1.0});
    }
  }
  return enc;
}

Eigen::MatrixXd Encoder::Transform(const Dataset& ds, std::size_t* unseen) const {
  const Schema& s = ds.schema();
  std::map<std::size_t, std::map<std::string, std::size_t>> cat_cols;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& col = columns_[c];
    if (col.feature >= s.size()) Fail(ErrorCode::kSchema, "schema incompatible with encoder");
    if (s.feature(col.feature).is_categorical()) cat_cols[col.feature][col.category] = c;
  }
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.size()),
                                            static_cast<Eigen::Index>(columns_.size() + 1));
  std::size_t n_unseen = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Record& r = ds[i];
    bool row_unseen = false;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto& col = columns_[c];
      if (col.category.empty()) x(i, c) = (r.num(col.feature) - col.mean) / col.scale;
    }
    for (const auto& [j, cols] : cat_cols) {
      auto it = cols.find(r.cat(j));
      if (it == cols.end()) {
        row_unseen = true;
      } else {
        x(i, it->second) = 1.0;
      }
    }
    x(i, columns_.size()) = 1.0;
    n_unseen += row_unseen;
  }
  if (unseen) *unseen = n_unseen;
  return x;
}

// Binary model dump. Layout: magic, version, then length-prefixed fields.
class ModelIo {
 public:
  static constexpr char kMagic[4] = {'I', 'C', 'B', 'M'};
  static constexpr std::uint32_t kVersion = 1;

  static void Save(const TrainedModel& m, std::ostream& out) {
    out.write(kMagic, 4);
    Put<std::uint32_t>(out, kVersion);
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(m.kind));
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(m.policy));
    Put<std::uint64_t>(out, m.classes.size());
    for (const auto& c : m.classes) PutString(out, c);
    Put<std::uint64_t>(out, m.encoder.columns_.size());
    for (const auto& c : m.encoder.columns_) {
      Put<std::uint64_t>(out, c.feature);
      PutString(out, c.category);
      Put<double>(out, c.mean);
      Put<double>(out, c.scale);
    }
    Put<std::uint64_t>(out, static_cast<std::uint64_t>(m.weights.rows()));
    Put<std::uint64_t>(out, static_cast<std::uint64_t>(m.weights.cols()));
    for (Eigen::Index i = 0; i < m.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.weights.cols(); ++j) Put<double>(out, m.weights(i, j));
    }
    Put<std::uint64_t>(out, m.trees.size());
    for (const auto& t : m.trees) {
      Put<std::uint64_t>(out, t.nodes.size());
      for (const auto& n : t.nodes) {
        Put<std::int32_t>(out, n.column);
        Put<double>(out, n.threshold);
        Put<std::int32_t>(out, n.left);
        Put<std::int32_t>(out, n.right);
        Put<std::int32_t>(out, n.label);
        Put<double>(out, n.decrease);
      }
    }
  }

  static TrainedModel Load(std::istream& in, SchemaPtr schema) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) Fail(ErrorCode::kParse, "not a model dump");
    if (Get<std::uint32_t>(in) != kVersion) Fail(ErrorCode::kParse, "unsupported model version");
    TrainedModel m;
    m.schema = std::move(schema);
    m.kind = static_cast<ClassifierKind>(Get<std::uint32_t>(in));
    m.policy = static_cast<FeaturePolicy>(Get<std::uint32_t>(in));
    m.classes.resize(Get<std::uint64_t>(in));
    for (auto& c : m.classes) c = GetString(in);
    m.encoder.columns_.resize(Get<std::uint64_t>(in));
    for (auto& c : m.encoder.columns_) {
      c.feature = Get<std::uint64_t>(in);
      c.category = GetString(in);
      c.mean = Get<double>(in);
      c.scale = Get<double>(in);
      if (!m.schema || c.feature >= m.schema->size()) {
        Fail(ErrorCode::kSchema, "model dump does not match the schema");
      }
    }
    const auto rows = static_cast<Eigen::Index>(Get<std::uint64_t>(in));
    const auto cols = static_cast<Eigen::Index>(Get<std::uint64_t>(in));
    m.weights.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m.weights(i, j) = Get<double>(in);
    }
    m.trees.resize(Get<std::uint64_t>(in));
    for (auto& t : m.trees) {
      t.nodes.resize(Get<std::uint64_t>(in));
      for (auto& n : t.nodes) {
        n.column = Get<std::int32_t>(in);
        n.threshold = Get<double>(in);
        n.left = Get<std::int32_t>(in);
        n.right = Get<std::int32_t>(in);
        n.label = Get<std::int32_t>(in);
        n.decrease = Get<double>(in);
      }
    }
    return m;
  }

 private:
  template <typename T>
  static void Put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <typename T>
  static T Get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) Fail(ErrorCode::kParse, "truncated model dump");
    return v;
  }
  static void PutString(std::ostream& out, const std::string& s) {
    Put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  static std::string GetString(std::istream& in) {
    const auto n = Get<std::uint64_t>(in);
    if (n > (1u << 20)) Fail(ErrorCode::kParse, "corrupt string in model dump");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) Fail(ErrorCode::kParse, "truncated model dump");
    return s;
  }
};

std::string ModelSummary(const TrainedModel& m) {
  std::ostringstream out;
  out << "kind " << ClassifierName(m.kind) << "\npolicy " << PolicyName(m.policy)
      << "\nclasses";
  for (const auto& c : m.classes) out << ' ' << c;
  out << "\ncolumns " << m.encoder.width() << '\n';
  auto column_name = [&](int c) {
    if (c < 0 || static_cast<std::size_t>(c) >= m.encoder.width()) return std::string("bias");
    const auto& col = m.encoder.columns()[c];
    std::string name = m.schema ? m.schema->feature(col.feature).name : std::to_string(col.feature);
    return col.category.empty() ? name : name + "=" + col.category;
  };
  if (m.kind == ClassifierKind::kLogisticRegression) {
    for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
      out << "weights[" << r << "]\n";
      for (Eigen::Index c = 0; c < m.weights.cols(); ++c) {
        out << "  " << column_name(static_cast<int>(c)) << ' ' << FormatDouble(m.weights(r, c))
            << '\n';
      }
    }
  } else {
    for (std::size_t t = 0; t < m.trees.size(); ++t) {
      out << "tree " << t << '\n';
      for (const auto& n : m.trees[t].nodes) {
        if (n.column < 0) continue;
        out << "  split " << column_name(n.column) << " <= " << FormatDouble(n.threshold)
            << '\n';
      }
    }
  }
  return out.str();
}

void SaveModel(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  ModelIo::Save(model, out);
  std::ofstream txt(path.string() + ".txt");
  if (!txt) Fail(ErrorCode::kIo, "cannot write " + path.string() + ".txt");
  txt << ModelSummary(model);
}

TrainedModel LoadModel(const std::filesystem::path& path, SchemaPtr schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot read " + path.string());
  return ModelIo::Load(in, std::move(schema));
}

}  // namespace iclbias

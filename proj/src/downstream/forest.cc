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
#include <numeric>

#include "iclbias/random.h"
#include "src/downstream/internal.h"

namespace iclbias::internal {
namespace {

double Gini(const std::vector<double>& counts, double n) {
  if (n <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += (c / n) * (c / n);
  return 1.0 - s;
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const std::vector<int>& y,
              const std::vector<std::string>& classes, const ForestParams& params, Rng& rng)
      : x_(x), y_(y), classes_(classes), params_(params), rng_(rng) {
    const auto width = static_cast<std::size_t>(x.cols() - 1);  // bias excluded
    width_ = width;
    mtry_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(width))));
  }

  Tree Build(std::vector<std::size_t> rows) {
    n_root_ = static_cast<double>(rows.size());
    tree_.nodes.clear();
    Grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int Grow(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::vector<double> counts(classes_.size(), 0.0);
    for (auto r : rows) counts[y_[r]] += 1.0;
    const double n = static_cast<double>(rows.size());
    tree_.nodes[id].label = ArgmaxByName(counts, classes_);
    const double g = Gini(counts, n);
    if (depth >= params_.max_depth || g <= 0.0 || width_ == 0 ||
        rows.size() < 2 * static_cast<std::size_t>(params_.min_leaf)) {
      return id;
    }

    const auto cand = SamplePrefix(rng_, width_, mtry_);
    int best_col = -1;
    double best_thr = 0.0, best_gain = 0.0;
    std::vector<std::pair<double, int>> vals(rows.size());
    for (auto col : cand) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        vals[i] = {x_(rows[i], col), y_[rows[i]]};
      }
      std::sort(vals.begin(), vals.end());
      std::vector<double> left(classes_.size(), 0.0), right = counts;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        left[vals[i].second] += 1.0;
        right[vals[i].second] -= 1.0;
        if (vals[i].first == vals[i + 1].first) continue;
        const double nl = double(i + 1), nr = n - nl;
        if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
        const double gain = g - (nl / n) * Gini(left, nl) - (nr / n) * Gini(right, nr);
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_col = static_cast<int>(col);
          best_thr = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }
    if (best_col < 0) return id;

    std::vector<std::size_t> lrows, rrows;
    for (auto r : rows) (x_(r, best_col) <= best_thr ? lrows : rrows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    tree_.nodes[id].column = best_col;
    tree_.nodes[id].threshold = best_thr;
    tree_.nodes[id].decrease = (n / n_root_) * best_gain;
    const int l = Grow(lrows, depth + 1);
    const int r = Grow(rrows, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<int>& y_;
  const std::vector<std::string>& classes_;
  const ForestParams& params_;
  Rng& rng_;
  std::size_t width_ = 0, mtry_ = 1;
  double n_root_ = 1.0;
  Tree tree_;
};

}  // namespace

int ArgmaxByName(const std::vector<double>& counts, const std::vector<std::string>& classes) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c) {
    if (counts[c] > counts[best] || (counts[c] == counts[best] && classes[c] < classes[best])) {
      best = c;
    }
  }
  return best;
}

std::vector<Tree> FitForest(const Eigen::MatrixXd& x, const std::vector<int>& y,
                            const std::vector<std::string>& classes,
                            const ForestParams& params, std::uint64_t seed) {
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(std::max(params.trees, 0)));
  const std::size_t n = static_cast<std::size_t>(x.rows());
  for (int t = 0; t < params.trees; ++t) {
    Rng rng = MakeRng(seed, {0x7ee, static_cast<std::uint64_t>(t)});
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = UniformIndex(rng, n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder b(x, y, classes, params, rng);
    trees.push_back(b.Build(std::move(rows)));
  }
  return trees;
}

int PredictForest(const std::vector<Tree>& trees, const Eigen::MatrixXd& x, Eigen::Index row,
                  const std::vector<std::string>& classes) {
  std::vector<double> votes(classes.size(), 0.0);
  for (const auto& t : trees) {
    int id = 0;
    while (t.nodes[id].column >= 0) {
      const auto& nd = t.nodes[id];
      id = x(row, nd.column) <= nd.threshold ? nd.left : nd.right;
    }
    votes[t.nodes[id].label] += 1.0;
  }
  return ArgmaxByName(votes, classes);
}

}  // namespace iclbias::internal

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

// Brute-force reference implementations used to check the library.
// Written from the metric definitions, sharing no code with src/.

#ifndef ICLBIAS_TESTS_ORACLES_H_
#define ICLBIAS_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace iclbias::oracle {

inline double Tvd(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return s / 2;
}

inline double Kl2(const std::vector<double>& p, const std::vector<double>& m) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) s += p[i] * std::log2(p[i] / m[i]);
  }
  return s;
}

inline double Jsd(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = (p[i] + q[i]) / 2;
  return Kl2(p, m) / 2 + Kl2(q, m) / 2;
}

// Group counts: favorable outcomes over members, per side.
inline double Spd(const std::vector<int>& fav, const std::vector<int>& unpriv) {
  double fu = 0, nu = 0, fp = 0, np = 0;
  for (std::size_t i = 0; i < fav.size(); ++i) {
    if (unpriv[i]) {
      nu += 1;
      fu += fav[i];
    } else {
      np += 1;
      fp += fav[i];
    }
  }
  return fu / nu - fp / np;
}

struct Confusion {
  double tp = 0, pos = 0, fp = 0, neg = 0;
};

inline void GroupConfusion(const std::vector<int>& pred, const std::vector<int>& truth,
                           const std::vector<int>& unpriv, Confusion& u, Confusion& p) {
  for (std::size_t i = 0; i < pred.size(); ++i) {
    Confusion& c = unpriv[i] ? u : p;
    if (truth[i]) {
      c.pos += 1;
      c.tp += pred[i];
    } else {
      c.neg += 1;
      c.fp += pred[i];
    }
  }
}

inline double Eo(const std::vector<int>& pred, const std::vector<int>& truth,
                 const std::vector<int>& unpriv) {
  Confusion u, p;
  GroupConfusion(pred, truth, unpriv, u, p);
  return std::fabs(u.tp / u.pos - p.tp / p.pos);
}

inline double Eod(const std::vector<int>& pred, const std::vector<int>& truth,
                  const std::vector<int>& unpriv) {
  Confusion u, p;
  GroupConfusion(pred, truth, unpriv, u, p);
  return (std::fabs(u.tp / u.pos - p.tp / p.pos) + std::fabs(u.fp / u.neg - p.fp / p.neg)) / 2;
}

// Classes come from the truth labels; F1 of a class with no hits is 0.
inline double MacroF1(const std::vector<std::string>& pred,
                      const std::vector<std::string>& truth) {
  std::set<std::string> classes(truth.begin(), truth.end());
  double total = 0;
  for (const auto& c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred[i] == c, t = truth[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    total += tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
  }
  return total / static_cast<double>(classes.size());
}

// Equal-width histogram over the pooled range, +smoothing per bin, then JSD.
inline double HistogramJsd(const std::vector<double>& a, const std::vector<double>& b,
                           int bins = 20, double smoothing = 1e-9) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* xs : {&a, &b}) {
    for (double v : *xs) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double w = (hi - lo) / bins;
  auto mass = [&](const std::vector<double>& xs) {
    std::vector<double> c(bins, 0.0);
    for (double v : xs) c[std::min(bins - 1, static_cast<int>((v - lo) / w))] += 1;
    double s = 0;
    for (auto& x : c) s += (x += smoothing);
    for (auto& x : c) x /= s;
    return c;
  };
  return Jsd(mass(a), mass(b));
}

struct Line {
  double slope, intercept, r2;
};

// Normal equations for y = a + b x.
inline Line Ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double a = (sy - b * sx) / n;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += std::pow(y[i] - a - b * x[i], 2);
    ss_tot += std::pow(y[i] - sy / n, 2);
  }
  const double r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return {b, a, r2};
}

// Smallest number of removals leaving |SPD| <= eps with both groups
// non-empty; -1 when no subset qualifies. Pools up to ~20 rows.
inline int MinRemovals(const std::vector<int>& fav, const std::vector<int>& unpriv, double eps) {
  const std::size_t n = fav.size();
  int best = -1;
  for (std::uint32_t keep = 0; keep < (1u << n); ++keep) {
    const int removed = static_cast<int>(n) - __builtin_popcount(keep);
    if (best >= 0 && removed >= best) continue;
    double fu = 0, nu = 0, fp = 0, np = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(keep >> i & 1u)) continue;
      if (unpriv[i]) {
        nu += 1;
        fu += fav[i];
      } else {
        np += 1;
        fp += fav[i];
      }
    }
    if (nu == 0 || np == 0) continue;
    if (std::fabs(fu / nu - fp / np) <= eps + 1e-12) best = removed;
  }
  return best;
}

}  // namespace iclbias::oracle

#endif  // ICLBIAS_TESTS_ORACLES_H_

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

#include "iclbias/mitigation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "iclbias/error.h"
#include "iclbias/random.h"

namespace iclbias {
namespace {

MitigationResult Keep(const std::vector<Record>& pool, std::vector<std::size_t> kept) {
  std::sort(kept.begin(), kept.end());
  MitigationResult r;
  std::vector<std::uint8_t> in(pool.size(), 0);
  for (std::size_t i : kept) {
    in[i] = 1;
    r.pool.push_back(pool[i]);
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!in[i]) r.removed.push_back(i);
  }
  r.kept = std::move(kept);
  return r;
}

double Rate(double f, double n) { return f / n; }

}  // namespace

const char* MitigationName(MitigationStrategy s) {
  switch (s) {
    case MitigationStrategy::kNone: return "none";
    case MitigationStrategy::kRandomSubset: return "random_subset";
    case MitigationStrategy::kGroupBalanced: return "group_balanced";
    case MitigationStrategy::kFairSpd: return "fair_spd";
    case MitigationStrategy::kCorrelationFilter: return "correlation_filter";
  }
  return "unknown";
}

MitigationStrategy ParseMitigation(const std::string& name) {
  for (auto s : {MitigationStrategy::kNone, MitigationStrategy::kRandomSubset,
                 MitigationStrategy::kGroupBalanced, MitigationStrategy::kFairSpd,
                 MitigationStrategy::kCorrelationFilter}) {
    if (name == MitigationName(s)) return s;
  }
  Fail(ErrorCode::kConfig, "unknown mitigation strategy '" + name + "'");
}

void MitigationConfig::Validate() const {
  if (!(epsilon >= 0.0)) Fail(ErrorCode::kConfig, "epsilon must be >= 0");
  if (!(drop_fraction >= 0.0 && drop_fraction < 1.0)) {
    Fail(ErrorCode::kConfig, "drop_fraction must lie in [0, 1)");
  }
  if (k_star && *k_star < 0) Fail(ErrorCode::kConfig, "k_star must be >= 0");
}

MitigationResult FairSpdPrune(const std::vector<Record>& pool, const Schema& schema,
                              const SubgroupSpec& sub, double epsilon) {
  if (epsilon < 0.0) Fail(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  std::vector<std::uint8_t> unpriv(pool.size()), fav(pool.size());
  double n_u = 0, f_u = 0, n_p = 0, f_p = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    unpriv[i] = sub.Matches(schema, pool[i]);
    fav[i] = pool[i].label == sub.favorable_label;
    (unpriv[i] ? n_u : n_p) += 1;
    (unpriv[i] ? f_u : f_p) += fav[i];
  }
  if (n_u == 0 || n_p == 0) {
    Fail(ErrorCode::kDegenerate, "Fair-SPD needs both subgroups in the pool");
  }
  std::vector<std::uint8_t> active(pool.size(), 1);
  MitigationResult res;
  double spd = Rate(f_u, n_u) - Rate(f_p, n_p);
  res.spd_trace.push_back(spd);
  while (std::fabs(spd) > epsilon) {
    std::size_t best = pool.size();
    double best_abs = 0.0, best_spd = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!active[i]) continue;
      double nu = n_u, fu = f_u, np = n_p, fp = f_p;
      if (unpriv[i]) {
        nu -= 1;
        fu -= fav[i];
      } else {
        np -= 1;
        fp -= fav[i];
      }
      if (nu == 0 || np == 0) continue;
      const double cand = Rate(fu, nu) - Rate(fp, np);
      if (best == pool.size() || std::fabs(cand) < best_abs) {
        best = i;
        best_abs = std::fabs(cand);
        best_spd = cand;
      }
    }
    if (best == pool.size() || best_abs > std::fabs(spd)) {
      res.degenerate = true;
      break;
    }
    active[best] = 0;
    (unpriv[best] ? n_u : n_p) -= 1;
    (unpriv[best] ? f_u : f_p) -= fav[best];
    spd = best_spd;
    res.spd_trace.push_back(spd);
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (active[i]) kept.push_back(i);
  }
  auto out = Keep(pool, kept);
  out.degenerate = res.degenerate;
  out.spd_trace = std::move(res.spd_trace);
  return out;
}

MitigationResult GroupBalance(const std::vector<Record>& pool, const Schema& schema,
                              const SubgroupSpec& sub, int k_star, std::uint64_t seed) {
  if (k_star < 2) Fail(ErrorCode::kInvalidArgument, "group balance needs k* >= 2");
  std::vector<std::size_t> u, p;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    (sub.Matches(schema, pool[i]) ? u : p).push_back(i);
  }
  if (u.empty() || p.empty()) {
    Fail(ErrorCode::kDegenerate, "group balance needs both subgroups in the pool");
  }
  std::size_t qu = static_cast<std::size_t>(k_star) / 2;
  std::size_t qp = static_cast<std::size_t>(k_star) - qu;
  bool shortfall = false;
  if (u.size() < qu) {
    qp += qu - u.size();
    qu = u.size();
    shortfall = true;
  }
  if (p.size() < qp) {
    qu = std::min(u.size(), qu + (qp - p.size()));
    qp = p.size();
    shortfall = true;
  }
  Rng rng = MakeRng(seed, {0x6b});
  std::vector<std::size_t> kept;
  for (std::size_t i : SamplePrefix(rng, u.size(), qu)) kept.push_back(u[i]);
  for (std::size_t i : SamplePrefix(rng, p.size(), qp)) kept.push_back(p[i]);
  auto out = Keep(pool, kept);
  out.shortfall = shortfall || kept.size() < static_cast<std::size_t>(k_star);
  return out;
}

double PearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) {
    Fail(ErrorCode::kInvalidArgument, "correlation: length mismatch");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  // A constant column carries no linear association.
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> AverageRanks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double MutualInformation(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size() || x.empty()) {
    Fail(ErrorCode::kInvalidArgument, "mutual information: length mismatch");
  }
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px, py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{x[i], y[i]}] += 1;
    px[x[i]] += 1;
    py[y[i]] += 1;
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (const auto& [xy, c] : joint) {
    mi += (c / n) * std::log(c * n / (px[xy.first] * py[xy.second]));
  }
  return std::max(0.0, mi);
}

std::vector<int> QuantileBins(const std::vector<double>& x, int bins) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (int q = 1; q < bins; ++q) {
    const double pos = static_cast<double>(q) / bins * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    cuts.push_back(sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]));
  }
  std::vector<int> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), x[i]) - cuts.begin());
  }
  return out;
}

CorrelationProfile ComputeCorrelationProfile(const std::vector<Record>& pool,
                                             const Schema& schema,
                                             const SubgroupSpec& sub) {
  if (pool.size() < 3) Fail(ErrorCode::kInvalidArgument, "correlation profile needs >= 3 examples");
  std::vector<double> a(pool.size());
  std::vector<int> a_int(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    a_int[i] = sub.Matches(schema, pool[i]);
    a[i] = a_int[i];
  }
  if (std::all_of(a_int.begin(), a_int.end(), [&](int v) { return v == a_int[0]; })) {
    Fail(ErrorCode::kDegenerate, "protected indicator is constant over the pool");
  }
  const auto a_ranks = AverageRanks(a);
  const auto excluded = sub.features();
  CorrelationProfile prof;
  std::vector<std::vector<double>> columns;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& f = schema.feature(j);
    const auto& prot = schema.protected_features();
    if (std::find(excluded.begin(), excluded.end(), f.name) != excluded.end() ||
        std::find(prot.begin(), prot.end(), f.name) != prot.end()) {
      continue;
    }
    double pear = 0, spear = 0, mi = 0;
    std::vector<double> column(pool.size());
    std::string category;
    if (f.is_categorical()) {
      double best_pear = -1.0;
      for (const auto& v : f.support) {
        std::vector<double> ind(pool.size());
        std::vector<int> ind_int(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
          ind_int[i] = pool[i].cat(j) == v;
          ind[i] = ind_int[i];
        }
        const double p = std::fabs(PearsonCorrelation(ind, a));
        spear = std::max(spear, std::fabs(PearsonCorrelation(AverageRanks(ind), a_ranks)));
        mi = std::max(mi, MutualInformation(ind_int, a_int));
        if (p > best_pear) {
          best_pear = p;
          category = v;
          column = ind;
        }
      }
      pear = best_pear;
    } else {
      for (std::size_t i = 0; i < pool.size(); ++i) column[i] = pool[i].num(j);
      pear = std::fabs(PearsonCorrelation(column, a));
      spear = std::fabs(PearsonCorrelation(AverageRanks(column), a_ranks));
      mi = MutualInformation(QuantileBins(column), a_int);
    }
    prof.features.push_back(f.name);
    prof.pearson.push_back(pear);
    prof.spearman.push_back(spear);
    prof.mutual_info.push_back(mi);
    prof.category.push_back(category);
    const double n = static_cast<double>(pool.size());
    const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    prof.mean.push_back(mean);
    prof.stddev.push_back(std::sqrt(ss / n));
    columns.push_back(std::move(column));
  }
  const std::size_t F = prof.features.size();
  double mi_lo = 0.0, mi_hi = 0.0;
  if (F > 0) {
    mi_lo = *std::min_element(prof.mutual_info.begin(), prof.mutual_info.end());
    mi_hi = *std::max_element(prof.mutual_info.begin(), prof.mutual_info.end());
  }
  for (std::size_t f = 0; f < F; ++f) {
    double mi_norm = 0.0;
    if (mi_hi - mi_lo > 1e-15) {
      mi_norm = (prof.mutual_info[f] - mi_lo) / (mi_hi - mi_lo);
    } else if (mi_hi > 0.0) {
      mi_norm = 1.0;
    }
    prof.rho.push_back((prof.pearson[f] + prof.spearman[f] + mi_norm) / 3.0);
  }
  prof.scores.assign(pool.size(), 0.0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t f = 0; f < F; ++f) {
      const double z =
          prof.stddev[f] > 0.0 ? (columns[f][i] - prof.mean[f]) / prof.stddev[f] : 0.0;
      prof.scores[i] += prof.rho[f] * std::fabs(z);
    }
  }
  return prof;
}

MitigationResult CorrelationFilter(const std::vector<Record>& pool, const Schema& schema,
                                   const SubgroupSpec& sub, double drop_fraction,
                                   const CorrelationProfile* profile) {
  if (!(drop_fraction >= 0.0 && drop_fraction < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "drop_fraction must lie in [0, 1)");
  }
  const auto drop = static_cast<std::size_t>(
      std::ceil(drop_fraction * static_cast<double>(pool.size()) - 1e-9));
  std::vector<std::size_t> all(pool.size());
  std::iota(all.begin(), all.end(), 0);
  if (drop == 0) return Keep(pool, all);
  CorrelationProfile local;
  if (profile == nullptr) {
    local = ComputeCorrelationProfile(pool, schema, sub);
    profile = &local;
  }
  if (profile->scores.size() != pool.size()) {
    Fail(ErrorCode::kInvalidArgument, "profile does not match the pool");
  }
  std::vector<std::size_t> order = all;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (profile->scores[a] != profile->scores[b]) return profile->scores[a] > profile->scores[b];
    return a > b;
  });
  std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(drop), order.end());
  return Keep(pool, kept);
}

MitigationResult RandomSubset(const std::vector<Record>& pool, int k_star,
                              std::uint64_t seed) {
  if (k_star < 0 || static_cast<std::size_t>(k_star) > pool.size()) {
    Fail(ErrorCode::kInvalidArgument, "k* must lie in [0, |pool|]");
  }
  Rng rng = MakeRng(seed, {0x55});
  auto out = Keep(pool, SamplePrefix(rng, pool.size(), k_star));
  out.shortfall = k_star == 0;
  return out;
}

MitigationResult ApplyMitigation(const MitigationConfig& cfg,
                                 const std::vector<Record>& pool, const Schema& schema,
                                 const SubgroupSpec& sub, std::uint64_t seed) {
  cfg.Validate();
  auto k_star = [&]() {
    if (cfg.k_star) return *cfg.k_star;
    return static_cast<int>(FairSpdPrune(pool, schema, sub, cfg.epsilon).pool.size());
  };
  switch (cfg.strategy) {
    case MitigationStrategy::kNone: {
      std::vector<std::size_t> all(pool.size());
      std::iota(all.begin(), all.end(), 0);
      return Keep(pool, all);
    }
    case MitigationStrategy::kRandomSubset:
      return RandomSubset(pool, std::min<int>(k_star(), static_cast<int>(pool.size())), seed);
    case MitigationStrategy::kGroupBalanced:
      return GroupBalance(pool, schema, sub, k_star(), seed);
    case MitigationStrategy::kFairSpd:
      return FairSpdPrune(pool, schema, sub, cfg.epsilon);
    case MitigationStrategy::kCorrelationFilter:
      return CorrelationFilter(pool, schema, sub, cfg.drop_fraction);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown strategy");
}

}  // namespace iclbias

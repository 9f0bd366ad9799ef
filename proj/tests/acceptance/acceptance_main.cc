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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
// Usage: iclbias_acceptance [CLI_PATH]. Exit status is non-zero when a
// criterion fails that is not listed in known_failures.txt, or when a listed
// one passes (so the list cannot go stale).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "iclbias/error.h"
#include "iclbias/experiment.h"
#include "iclbias/format.h"
#include "iclbias/metrics.h"
#include "iclbias/mitigation.h"
#include "tests/oracles.h"
#include "tests/test_util.h"

namespace iclbias {
namespace {

namespace fs = std::filesystem;
using testing::GroupB;
using testing::RandomSmall;
using testing::SmallSchema;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

ExperimentConfig Config(const std::string& file) {
  auto cfg = LoadConfig(fs::path(ICLBIAS_CONFIG_DIR) / file);
  cfg.output_dir = fs::temp_directory_path() / ("iclbias_acceptance_" + cfg.name);
  cfg.persist_synthetic = false;
  cfg.workers = 1;
  cfg.classifiers.clear();
  return cfg;
}

ClassifierConfig Classifier(ClassifierKind kind, std::vector<FeaturePolicy> policies) {
  ClassifierConfig c;
  c.kind = kind;
  c.policies = std::move(policies);
  return c;
}

std::vector<ReportRow> Select(const std::vector<ReportRow>& rows,
                              const std::function<bool(const ReportRow&)>& keep) {
  std::vector<ReportRow> out;
  for (const auto& r : rows) {
    if (keep(r)) out.push_back(r);
  }
  return out;
}

// ---- 1. metric oracles ----
Outcome MetricOracles() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0, 1);
  std::map<std::string, double> worst;
  auto note = [&](const std::string& m, double err) { worst[m] = std::max(worst[m], err); };
  const int kInstances = 200;
  for (int t = 0; t < kInstances; ++t) {
    // Categorical TVD / JSD on random count vectors.
    const int m = 2 + static_cast<int>(rng() % 5);
    std::vector<double> cp(m), cq(m);
    std::vector<std::string> support;
    for (int i = 0; i < m; ++i) {
      cp[i] = static_cast<double>(rng() % 10);
      cq[i] = static_cast<double>(rng() % 10);
      support.push_back("c" + std::to_string(i));
    }
    cp[0] += 1;
    cq[m - 1] += 1;
    auto p = CategoricalDistribution::FromCounts(support, cp);
    auto q = CategoricalDistribution::FromCounts(support, cq);
    double sp = 0, sq = 0;
    for (int i = 0; i < m; ++i) sp += cp[i], sq += cq[i];
    std::vector<double> mp(m), mq(m);
    for (int i = 0; i < m; ++i) mp[i] = cp[i] / sp, mq[i] = cq[i] / sq;
    note("tvd", std::fabs(Tvd(p, q) - oracle::Tvd(mp, mq)));
    note("jsd", std::fabs(Jsd(p, q) - oracle::Jsd(mp, mq)));

    // Smoothed histogram JSD on continuous samples.
    std::normal_distribution<double> g(0, 1);
    std::vector<double> a(20 + rng() % 200), b(20 + rng() % 200);
    const double shift = u(rng);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng) + shift;
    double lo = 1e300, hi = -1e300;
    for (const auto* xs : {&a, &b}) {
      for (double v : *xs) lo = std::min(lo, v), hi = std::max(hi, v);
    }
    auto edges = EqualWidthEdges(lo, hi);
    note("jsd_hist", std::fabs(Jsd(BuildHistogram(a, edges), BuildHistogram(b, edges)) -
                               oracle::HistogramJsd(a, b)));

    // SPD on a dataset.
    auto ds = RandomSmall(rng, 10 + rng() % 90, 0.2 + 0.6 * u(rng), u(rng));
    std::vector<int> fav, unpriv;
    for (const auto& r : ds.records()) {
      fav.push_back(r.label == "1");
      unpriv.push_back(r.cat(0) == "B");
    }
    note("spd", std::fabs(Spd(ds, GroupB()) - oracle::Spd(fav, unpriv)));

    // EO / EOD; redraw until every group has both truth values.
    std::vector<int> pi, ti, gi;
    std::vector<std::string> ps, ts;
    std::vector<std::uint8_t> gs;
    for (;;) {
      pi.clear(), ti.clear(), gi.clear();
      const int n = 8 + static_cast<int>(rng() % 60);
      for (int i = 0; i < n; ++i) {
        pi.push_back(rng() % 2);
        ti.push_back(rng() % 2);
        gi.push_back(rng() % 2);
      }
      int seen[2][2] = {{0, 0}, {0, 0}};
      for (int i = 0; i < n; ++i) seen[gi[i]][ti[i]] = 1;
      if (seen[0][0] && seen[0][1] && seen[1][0] && seen[1][1]) break;
    }
    ps.clear(), ts.clear(), gs.clear();
    for (std::size_t i = 0; i < pi.size(); ++i) {
      ps.push_back(std::to_string(pi[i]));
      ts.push_back(std::to_string(ti[i]));
      gs.push_back(static_cast<std::uint8_t>(gi[i]));
    }
    note("eo", std::fabs(Eo(ps, ts, gs, "1") - oracle::Eo(pi, ti, gi)));
    note("eod", std::fabs(Eod(ps, ts, gs, "1") - oracle::Eod(pi, ti, gi)));

    // Macro F1, three classes.
    std::vector<std::string> fp, ft;
    const char* cls[] = {"a", "b", "c"};
    const int n = 5 + static_cast<int>(rng() % 50);
    for (int i = 0; i < n; ++i) {
      fp.push_back(cls[rng() % 3]);
      ft.push_back(cls[rng() % 3]);
    }
    note("macro_f1", std::fabs(MacroF1(fp, ft) - oracle::MacroF1(fp, ft)));

    // OLS.
    std::vector<double> xs(3 + rng() % 30), ys(xs.size());
    const double slope = 4 * u(rng) - 2;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xs[i] = u(rng);
      ys[i] = slope * xs[i] + 0.3 * g(rng);
    }
    const auto fit = OlsFit(xs, ys);
    const auto want = oracle::Ols(xs, ys);
    note("ols", std::max({std::fabs(fit.slope - want.slope),
                          std::fabs(fit.intercept - want.intercept),
                          std::fabs(fit.r_squared - want.r2)}));
  }
  Outcome out{true, std::to_string(kInstances) + " instances per metric; max |err|"};
  for (const auto& [m, e] : worst) {
    const double tol = m == "jsd_hist" ? 1e-6 : 1e-9;
    out.pass = out.pass && e <= tol;
    out.detail += " " + m + "=" + Fmt("%.1e", e);
  }
  return out;
}

// ---- 2. mixture linearity ----
Outcome MixtureLinearity() {
  auto cfg = Config("propagation_toy.json");
  cfg.k_grid = {80};
  cfg.pi_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  cfg.n_synthetic = 5000;
  cfg.seeds = {1};
  auto train = LoadDataset(cfg.train_path, std::make_shared<const Schema>(LoadSchema(cfg.schema_path)));
  double anchor_rate = 0;
  for (const auto& r : train.records()) anchor_rate += cfg.subgroup.Matches(train.schema(), r);
  anchor_rate /= static_cast<double>(train.size());
  const auto rep = RunPropagation(cfg);
  std::vector<double> xs, ys;
  for (const auto& r : rep.rows) {
    xs.push_back(r.p_target_prompt);
    ys.push_back(r.p_target_generated);
  }
  const auto fit = OlsFit(xs, ys);
  Outcome o;
  o.pass = std::fabs(fit.slope - 0.8) <= 0.05 && fit.r_squared >= 0.98 &&
           std::fabs(rep.rows.front().alpha - 0.8) < 1e-12;
  o.detail = Fmt("anchor target rate %.3f, alpha %.3f, slope %.4f, R^2 %.5f", anchor_rate,
                 rep.rows.front().alpha, fit.slope, fit.r_squared);
  return o;
}

// ---- 3. monotone beta_k ----
Outcome MonotoneBeta() {
  auto cfg = Config("propagation_toy.json");
  cfg.seeds = {1, 2, 3};
  const auto rep = RunPropagation(cfg);
  Outcome o{true, ""};
  for (auto seed : cfg.seeds) {
    std::vector<std::pair<int, double>> betas;
    for (const auto& f : rep.fits) {
      if (f.seed == std::to_string(seed)) betas.emplace_back(f.k, f.beta);
    }
    std::sort(betas.begin(), betas.end());
    bool strict = betas.size() == 4;
    for (std::size_t i = 1; i < betas.size(); ++i) strict = strict && betas[i].second > betas[i - 1].second;
    o.pass = o.pass && strict;
    o.detail += "seed " + std::to_string(seed) + ":";
    for (const auto& [k, b] : betas) o.detail += Fmt(" %.3f", b);
    o.detail += strict ? "; " : " (not strict); ";
  }
  o.detail += "k = 20, 40, 60, 80";
  return o;
}

// ---- 4. attack success threshold ----
Outcome AttackThreshold() {
  auto cfg = Config("attack_compas.json");
  cfg.pi_grid = {0.0, 0.3};
  const auto rep = RunAttack(cfg);
  std::map<std::uint64_t, std::map<double, double>> spd;
  for (const auto& r : rep.rows) spd[r.seed][r.pi] = r.spd_s;
  Outcome o{true, "|SPD_S| shift per seed:"};
  double mean = 0;
  for (auto& [seed, m] : spd) {
    const double shift = std::fabs(m[0.3]) - std::fabs(m[0.0]);
    mean += shift / static_cast<double>(spd.size());
    o.pass = o.pass && shift > 0.1;
    o.detail += Fmt(" %.3f", shift);
  }
  o.pass = o.pass && spd.size() == 5;
  o.detail += Fmt("; mean %.3f (pi 0.3, k 80, alpha %.2f)", mean, rep.rows.front().alpha);
  return o;
}

// ---- 5. utility-fairness decoupling ----
Outcome Decoupling() {
  auto cfg = Config("attack_compas.json");
  cfg.pi_grid = {0.0, 0.6};
  cfg.classifiers = {Classifier(ClassifierKind::kLogisticRegression, {FeaturePolicy::kAware}),
                     Classifier(ClassifierKind::kRandomForest, {FeaturePolicy::kAware})};
  const auto rep = RunAttack(cfg);
  Outcome o{true, ""};
  for (const std::string name : {"logistic_regression", "random_forest"}) {
    std::map<std::uint64_t, std::map<double, ReportRow>> by;
    for (const auto& r : rep.rows) {
      if (r.classifier == name) by[r.seed][r.pi] = r;
    }
    double f1_0 = 0, f1_6 = 0;
    int increases = 0;
    for (auto& [seed, m] : by) {
      f1_0 += m[0.0].f1_r / static_cast<double>(by.size());
      f1_6 += m[0.6].f1_r / static_cast<double>(by.size());
      increases += std::fabs(m[0.6].spd_d) > std::fabs(m[0.0].spd_d);
    }
    const bool ok = by.size() == 5 && std::fabs(f1_6 - f1_0) < 0.05 && increases >= 4;
    o.pass = o.pass && ok;
    o.detail += (name == "logistic_regression" ? "LR" : "RF") +
                Fmt(" dF1 %+.4f, |SPD_D| up in %.0f/5", f1_6 - f1_0, increases) +
                (ok ? "; " : " [fails]; ");
  }
  o.detail += "aware policy, pi 0.6 vs 0";
  return o;
}

// ---- 6. Fair-SPD contract ----
Outcome FairSpdContract() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0, 1);
  int infeasible = 0, non_monotone = 0, degenerate = 0, pools = 0;
  auto check = [&](const MitigationResult& res) {
    ++pools;
    if (res.degenerate) {
      ++degenerate;
    } else if (std::fabs(Spd(Dataset(SmallSchema(), res.pool), GroupB())) > 0.02 + 1e-12) {
      ++infeasible;
    }
    for (std::size_t i = 1; i < res.spd_trace.size(); ++i) {
      if (std::fabs(res.spd_trace[i]) > std::fabs(res.spd_trace[i - 1])) {
        ++non_monotone;
        break;
      }
    }
  };
  // Contract on 500 larger pools.
  for (int t = 0; t < 500; ++t) {
    auto ds = RandomSmall(rng, 16 + rng() % 150, 0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng));
    check(FairSpdPrune(ds.records(), ds.schema(), GroupB(), 0.02));
  }
  // Exhaustive comparison on 100 pools of at most 15.
  int compared = 0, optimal = 0, max_excess = 0, oracle_infeasible = 0, stalled = 0;
  double excess_sum = 0;
  for (int t = 0; t < 100; ++t) {
    auto ds = RandomSmall(rng, 4 + rng() % 12, 0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng));
    auto res = FairSpdPrune(ds.records(), ds.schema(), GroupB(), 0.02);
    check(res);
    std::vector<int> fav, unpriv;
    for (const auto& r : ds.records()) {
      fav.push_back(r.label == "1");
      unpriv.push_back(r.cat(0) == "B");
    }
    const int best = oracle::MinRemovals(fav, unpriv, 0.02);
    if (best < 0) ++oracle_infeasible;
    if (res.degenerate && best >= 0) ++stalled;
    if (res.degenerate || best < 0) continue;
    const int excess = static_cast<int>(res.removed.size()) - best;
    ++compared;
    optimal += excess == 0;
    excess_sum += excess;
    max_excess = std::max(max_excess, excess);
  }
  Outcome o;
  o.pass = infeasible == 0 && non_monotone == 0 && compared > 0;
  o.detail = Fmt("%.0f pools: %.0f infeasible, %.0f non-monotone traces, %.0f degenerate; ",
                 pools, infeasible, non_monotone, degenerate) +
             Fmt("exhaustive (n<=15): %.0f compared, greedy optimal in %.0f, ", compared, optimal) +
             Fmt("mean excess %.3f, max excess %.0f removals", compared ? excess_sum / compared : 0,
                 max_excess) +
             Fmt(", %.0f with no feasible subset, %.0f flagged although one exists",
                 oracle_infeasible, stalled);
  return o;
}

// ---- 7. mitigation ordering ----
Outcome MitigationOrdering() {
  auto cfg = Config("mitigation_compas.json");
  cfg.pi_grid = {0.3};
  cfg.strategies = {MitigationStrategy::kNone, MitigationStrategy::kGroupBalanced,
                    MitigationStrategy::kFairSpd};
  const auto rep = RunMitigation(cfg);
  std::map<std::string, std::vector<double>> abs_spd;
  for (const auto& r : rep.rows) abs_spd[r.mitigation].push_back(std::fabs(r.spd_s));
  auto mean = [&](const std::string& s) { return Mean(abs_spd[s]); };
  Outcome o;
  o.pass = abs_spd["none"].size() == 5 && mean("fair_spd") <= mean("group_balanced") &&
           mean("group_balanced") <= mean("none");
  o.detail = Fmt("mean |SPD_S| at pi 0.3: fair_spd %.4f, group_balanced %.4f, none %.4f",
                 mean("fair_spd"), mean("group_balanced"), mean("none"));
  return o;
}

// ---- 8. feature-aligned covariate shift ----
Outcome CovariateShift() {
  auto cfg = Config("attack_compas.json");
  cfg.pi_grid = {0.0, 0.6};
  const auto rep = RunAttack(cfg);
  std::map<double, std::vector<double>> target, other;
  for (const auto& a : rep.alignment) {
    if (a.feature != "all" || a.mitigation != "none") continue;
    target[a.pi].push_back(a.target);
    other[a.pi].push_back(a.other);
  }
  const double dt = Mean(target[0.6]) - Mean(target[0.0]);
  const double dn = Mean(other[0.6]) - Mean(other[0.0]);
  Outcome o;
  o.pass = target[0.0].size() == 5 && dt >= 0.2 && std::fabs(dn) < 0.05;
  o.detail = Fmt("aligned mass, target %.3f -> %.3f (%+.3f); ", Mean(target[0.0]),
                 Mean(target[0.6]), dt) +
             Fmt("non-target %.3f -> %.3f (%+.3f)", Mean(other[0.0]), Mean(other[0.6]), dn);
  return o;
}

// ---- 9. protected-feature reliance ----
Outcome ProtectedReliance() {
  auto cfg = Config("attack_compas.json");
  cfg.pi_grid = {0.0, 0.6};
  cfg.classifiers = {Classifier(ClassifierKind::kRandomForest,
                                {FeaturePolicy::kAware, FeaturePolicy::kBlind})};
  const auto rep = RunAttack(cfg);
  std::map<std::uint64_t, std::map<double, double>> aware;
  bool blind_zero = true;
  int blind_rows = 0;
  for (const auto& r : rep.rows) {
    if (r.policy == "aware") aware[r.seed][r.pi] = r.mdi_protected;
    if (r.policy == "blind") {
      ++blind_rows;
      blind_zero = blind_zero && r.mdi_protected == 0.0;
    }
  }
  int up = 0;
  std::string per_seed;
  for (auto& [seed, m] : aware) {
    up += m[0.6] > m[0.0];
    per_seed += Fmt(" %.3f->%.3f", m[0.0], m[0.6]);
  }
  Outcome o;
  o.pass = aware.size() == 5 && up >= 4 && blind_zero && blind_rows == 10;
  o.detail = Fmt("aware MDI up in %.0f/5 seeds (", up) + per_seed.substr(1) +
             "); blind " + (blind_zero ? "exactly 0" : "NON-ZERO") + Fmt(" in %.0f rows", blind_rows);
  return o;
}

// ---- 10. determinism through the CLI ----
std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome Determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given"};
  const fs::path work = fs::temp_directory_path() / "iclbias_acceptance_determinism";
  fs::remove_all(work);
  const fs::path config = fs::path(ICLBIAS_CONFIG_DIR) / "propagation_toy.json";
  const std::vector<std::pair<std::string, int>> runs{{"a", 1}, {"b", 1}, {"c", 3}};
  for (const auto& [tag, workers] : runs) {
    const std::string cmd = "\"" + cli + "\" propagate --config \"" + config.string() +
                            "\" --out \"" + (work / tag).string() + "\" --workers " +
                            std::to_string(workers) + " > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + cmd};
  }
  int files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(work / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), work / "a");
    const std::string ref = Slurp(e.path());
    ++files;
    differing += ref != Slurp(work / "b" / rel) || ref != Slurp(work / "c" / rel);
  }
  const bool report_present = fs::exists(work / "a" / "report.csv");
  fs::remove_all(work);
  Outcome o;
  o.pass = report_present && files > 1 && differing == 0;
  o.detail = Fmt("3 propagate runs (workers 1, 1, 3): %.0f files compared, %.0f differ", files,
                 differing);
  return o;
}

std::set<int> KnownFailures() {
  std::set<int> out;
  std::ifstream in(fs::path(ICLBIAS_ACCEPTANCE_DIR) / "known_failures.txt");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.insert(std::atoi(line.c_str()));
  }
  return out;
}

}  // namespace
}  // namespace iclbias

int main(int argc, char** argv) {
  using namespace iclbias;
  const std::string cli = argc > 1 ? argv[1] : "";
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "metric oracles", 10, MetricOracles},
      {2, "mixture linearity", 30, MixtureLinearity},
      {3, "monotone beta_k", 120, MonotoneBeta},
      {4, "attack threshold", 60, AttackThreshold},
      {5, "utility-fairness decoupling", 180, Decoupling},
      {6, "fair-spd contract", 60, FairSpdContract},
      {7, "mitigation ordering", 180, MitigationOrdering},
      {8, "aligned covariate shift", 1e9, CovariateShift},
      {9, "protected-feature reliance", 1e9, ProtectedReliance},
      {10, "determinism", 1e9, [&] { return Determinism(cli); }},
  };
  const auto known = KnownFailures();
  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    const bool listed = known.count(c.id) > 0;
    std::string timing = c.budget_s < 1e8 ? Fmt("%.1f s of %.0f s", secs, c.budget_s)
                                          : Fmt("%.1f s", secs);
    if (!in_time) timing += ", over budget";
    std::printf("criterion %2d %-28s %s%s  [%s] %s\n", c.id, c.name, pass ? "PASS" : "FAIL",
                listed ? (pass ? " (listed as known failure)" : " (known)") : "", timing.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    unexpected += pass == listed;
  }
  if (unexpected) std::printf("%d unexpected result(s)\n", unexpected);
  return unexpected ? 1 : 0;
}

/*
 * Copyright 2026 The Shroud Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// End-to-end acceptance run: builds the default dataset, runs the full sweep
// twice under one master seed, attacks and reports, then checks each
// criterion and prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "shroud/error.hpp"
#include "shroud/experiments.hpp"
#include "shroud/hybrid.hpp"
#include "shroud/mixing.hpp"
#include "shroud/remodel.hpp"
#include "shroud/workloads.hpp"

namespace fs = std::filesystem;
using namespace shroud;

namespace {

// Tolerances and bands, in accuracy percentage points unless noted.
constexpr double kBaselineMin = 80.0;
constexpr double kBaselineBestMin = 90.0;
constexpr double kRemodelDropMin = 25.0;
constexpr double kRemodelL5Lo = 45.0;
constexpr double kRemodelL5Hi = 70.0;
constexpr double kMonotoneTol = 3.0;
constexpr double kAblationTol = 2.0;
constexpr double kMixingDropMin = 20.0;
constexpr double kOverheadL5Max = 2.5;
constexpr double kDecisionToRemodelMax = 0.1;
constexpr double kHybridTol = 2.0;
constexpr double kAdaptiveDropMin = 20.0;
constexpr double kAdaptiveLo = 35.0;
constexpr double kAdaptiveHi = 65.0;
constexpr int kPropertyCases = 1000;
constexpr int kPickDraws = 100000;
constexpr int kSignRuns = 200;
constexpr double kSignAlpha = 0.01;
constexpr double kGradRelErr = 1e-4;

constexpr std::size_t kClasses = 10;
constexpr std::size_t kSamplesPerClass = 100;

const char* const kModels[] = {"knn", "dtree", "mlp"};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << why << "]";
    }
  }
};

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string num(double v, const char* f = "%.3g") {
  char buf[32];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void report(int id, const char* title, const Outcome& o) {
  std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.str().c_str());
  std::fflush(stdout);
}

class Results {
 public:
  explicit Results(const fs::path& dir) {
    for (const auto& r : read_summary(dir / "summary.csv")) {
      acc_[r.config][r.model] = 100.0 * r.accuracy;
      if (r.adaptive_accuracy >= 0) adaptive_[r.config][r.model] = 100.0 * r.adaptive_accuracy;
    }
    for (const auto& r : read_overheads(dir / "overhead.csv")) over_[r.config] = r;
    for (const auto& r : read_timing(dir / "timing.csv")) timing_[r.config] = r.mean_anonymize_ms;
  }

  double acc(const std::string& config, const std::string& model) const {
    return lookup(acc_, config, model);
  }
  double adaptive(const std::string& config, const std::string& model) const {
    return lookup(adaptive_, config, model);
  }
  const OverheadRow& overhead(const std::string& config) const { return over_.at(config); }
  const std::map<std::string, double>& timing() const { return timing_; }

 private:
  static double lookup(const std::map<std::string, std::map<std::string, double>>& m,
                       const std::string& config, const std::string& model) {
    auto it = m.find(config);
    if (it == m.end() || !it->second.count(model)) {
      throw shroud::Error(ErrorCode::kConfig, "no result for " + config + "/" + model);
    }
    return it->second.at(model);
  }

  std::map<std::string, std::map<std::string, double>> acc_, adaptive_;
  std::map<std::string, OverheadRow> over_;
  std::map<std::string, double> timing_;
};

std::string remodel_name(int level, const std::string& mask) {
  return RunConfig::remodel(level, FeatureMask::parse(mask)).name;
}
std::string mixing_name(std::size_t b, bool par) { return RunConfig::mixing(b, par).name; }
std::string hybrid_name(int level, std::size_t b, bool par) {
  return RunConfig::hybrid(level, b, par).name;
}

// Each value may exceed the lowest earlier value by at most `tol`.
bool non_increasing(const std::vector<double>& v, double tol) {
  double low = INFINITY;
  for (double x : v) {
    if (x > low + tol) return false;
    low = std::min(low, x);
  }
  return true;
}

std::string series(const std::vector<double>& v, const std::function<std::string(double)>& f = pct) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "/" : "") + f(v[i]);
  return s;
}

void run_pipeline(const fs::path& root, std::uint64_t seed, const Clock& clock) {
  fs::remove_all(root);
  cmd_gen(kClasses, kSamplesPerClass, seed, root / "dataset");
  cmd_run(root / "dataset", Sweep{}, clock, seed, root / "results");
  cmd_attack(root / "results", AttackOptions{}, seed, root / "results");
  cmd_report(root / "results");
}

// ---- criteria over experiment results ----------------------------------------

Outcome baseline_strength(const Results& r) {
  Outcome o;
  double best = 0;
  for (const char* m : kModels) {
    const double a = r.acc("baseline", m);
    o.detail << m << " " << pct(a) << " ";
    o.require(a > kBaselineMin, std::string(m) + " <= 80");
    best = std::max(best, a);
  }
  o.require(best >= kBaselineBestMin, "best < 90");
  return o;
}

Outcome remodel_effectiveness(const Results& r) {
  Outcome o;
  std::vector<double> v{r.acc("baseline", "dtree")};
  for (int l = 1; l <= 5; ++l) v.push_back(r.acc(remodel_name(l, "all"), "dtree"));
  o.detail << "dtree all-features L0..L5 " << series(v) << ", drop " << pct(v[0] - v[5]);
  o.require(v[0] - v[5] >= kRemodelDropMin, "drop < 25");
  o.require(v[5] >= kRemodelL5Lo && v[5] <= kRemodelL5Hi, "L5 outside [45,70]");
  o.require(non_increasing(v, kMonotoneTol), "not monotone within 3");
  return o;
}

Outcome feature_ablation(const Results& r) {
  Outcome o;
  const double base = r.acc("baseline", "dtree");
  o.detail << "dtree in/both/time/all:";
  for (int l = 1; l <= 5; ++l) {
    const double in = r.acc(remodel_name(l, "in"), "dtree");
    const double both = r.acc(remodel_name(l, "both"), "dtree");
    const double time = r.acc(remodel_name(l, "time"), "dtree");
    const double all = r.acc(remodel_name(l, "all"), "dtree");
    o.detail << " L" << l << " " << series({in, both, time, all});
    const std::string at = " at L" + std::to_string(l);
    o.require(in + kAblationTol >= both, "in < both" + at);
    o.require(both + kAblationTol >= time, "both < time" + at);
    o.require(time + kAblationTol >= all, "time < all" + at);
    o.require(std::abs(in - base) <= kAblationTol, "in-only off baseline" + at);
  }
  return o;
}

Outcome mixing_effectiveness(const Results& r) {
  Outcome o;
  for (const bool par : {false, true}) {
    for (const char* m : kModels) {
      std::vector<double> v;
      for (std::size_t b = 2; b <= 5; ++b) v.push_back(r.acc(mixing_name(b, par), m));
      const double drop = r.acc("baseline", m) - v.back();
      o.detail << (par ? "par " : "seq ") << m << " " << series(v) << " (drop " << pct(drop) << ") ";
      const std::string what = std::string(par ? "par " : "seq ") + m;
      o.require(non_increasing(v, kMonotoneTol), what + " not monotone within 3");
      o.require(drop >= kMixingDropMin, what + " drop < 20");
    }
  }
  return o;
}

Outcome overhead_trends(const Results& r) {
  Outcome o;
  std::vector<double> t, c, m;
  for (int l = 1; l <= 5; ++l) {
    const auto& row = r.overhead(remodel_name(l, "all"));
    t.push_back(row.time_ratio);
    c.push_back(row.cpu_ratio);
    m.push_back(row.mem_ratio);
  }
  auto fmt3 = [](double x) { return num(x, "%.3f"); };
  o.detail << "remodel L1..L5 time " << series(t, fmt3) << " cpu " << series(c, fmt3) << " mem "
           << series(m, fmt3) << "; ";
  for (const auto* v : {&t, &c, &m}) {
    o.require(std::is_sorted(v->begin(), v->end()), "remodel ratio decreases with level");
    o.require(v->back() <= kOverheadL5Max, "L5 ratio > 2.5");
  }
  double min_seq_time = INFINITY;
  bool mem_exact = true;
  for (std::size_t b = 2; b <= 5; ++b) {
    for (const bool par : {false, true}) {
      const auto& row = r.overhead(mixing_name(b, par));
      mem_exact = mem_exact && row.mem_ratio == 1.0;
      if (!par) min_seq_time = std::min(min_seq_time, row.time_ratio);
    }
  }
  o.detail << "mixing mem ratio " << (mem_exact ? "1.0 everywhere" : "NOT 1.0") << ", min seq time ratio "
           << fmt3(min_seq_time);
  o.require(mem_exact, "mixing mem ratio != 1.0");
  o.require(min_seq_time > 1.0, "sequential mixing time ratio <= 1.0");
  return o;
}

Outcome anonymization_cost_order(const Results& r) {
  Outcome o;
  double remodel_sum = 0, mix_sum = 0;
  int remodel_n = 0, mix_n = 0;
  for (const auto& [config, ms] : r.timing()) {
    if (config.rfind("remodel_", 0) == 0) {
      remodel_sum += ms;
      ++remodel_n;
    } else if (config.rfind("mix_", 0) == 0) {
      mix_sum += ms;
      ++mix_n;
    }
  }
  const double remodel = remodel_sum / remodel_n;
  const double mix = mix_sum / mix_n;
  std::vector<double> by_level;
  for (int l = 1; l <= 5; ++l) by_level.push_back(1000.0 * r.timing().at(remodel_name(l, "all")));
  auto us = [](double x) { return num(x, "%.2f"); };
  o.detail << "per graph: mixing " << num(1000 * mix, "%.3f") << " us, remodel "
           << num(1000 * remodel, "%.3f") << " us (ratio " << num(mix / remodel, "%.3f")
           << "); remodel all-features L1..L5 " << series(by_level, us) << " us";
  o.require(mix <= kDecisionToRemodelMax * remodel, "mixing cost > remodel cost / 10");
  for (std::size_t i = 1; i < by_level.size(); ++i) {
    o.require(by_level[i] > by_level[i - 1], "remodel cost not increasing at L" + std::to_string(i + 1));
  }
  return o;
}

Outcome hybrid_dominance(const Results& r) {
  Outcome o;
  for (const char* m : kModels) {
    o.detail << m << ":";
    for (std::size_t b = 2; b <= 5; ++b) {
      const double h = r.acc(hybrid_name(3, b, true), m);
      const double rem = r.acc(remodel_name(3, "all"), m);
      const double mix = r.acc(mixing_name(b, true), m);
      o.detail << " B" << b << " " << pct(h) << "<=" << pct(std::min(rem, mix)) << "+2";
      o.require(h <= rem + kHybridTol, std::string(m) + " hybrid above remodel at B" + std::to_string(b));
      o.require(h <= mix + kHybridTol, std::string(m) + " hybrid above mixing at B" + std::to_string(b));
    }
    o.detail << "; ";
  }
  return o;
}

Outcome adaptive_attacker(const Results& r) {
  Outcome o;
  const std::string cfg = hybrid_name(5, 5, true);
  for (const char* m : kModels) {
    const double a = r.adaptive(cfg, m);
    const double base = r.acc("baseline", m);
    o.detail << m << " " << pct(a) << " (baseline " << pct(base) << ") ";
    o.require(base - a >= kAdaptiveDropMin, std::string(m) + " within 20 of baseline");
    o.require(a >= kAdaptiveLo && a <= kAdaptiveHi, std::string(m) + " outside [35,65]");
  }
  return o;
}

// ---- property suites ------------------------------------------------------------

struct PropertyStats {
  int cases = 0;
  int output_failures = 0;
  int schedules = 0;
  int schedule_failures = 0;
  std::string first_failure;
};

void check_schedule(PropertyStats& st, const Schedule& s, std::span<const CompiledGraph> graphs,
                    const std::string& where) {
  ++st.schedules;
  const ScheduleCheck c = validate_schedule(s, graphs);
  if (!c.ok) {
    ++st.schedule_failures;
    if (st.first_failure.empty()) st.first_failure = where + ": " + c.reason;
  }
}

PropertyStats semantic_property_suite(std::uint64_t seed) {
  static const FeatureMask masks[] = {FeatureMask::none(),       FeatureMask::parse("in"),
                                      FeatureMask::parse("out"), FeatureMask::parse("both"),
                                      FeatureMask::parse("time"), FeatureMask::all()};
  const auto samples = generate_dataset(default_class_suite(), 5, derive_seed(seed, "prop-data"));
  static const OpTag kinds[] = {OpTag::kSort,     OpTag::kSearch,     OpTag::kHash,
                                OpTag::kEncrypt,  OpTag::kDecrypt,    OpTag::kCompress,
                                OpTag::kDownsample, OpTag::kNormalize, OpTag::kSplit,
                                OpTag::kTrain,    OpTag::kEvaluate};
  Rng rng(derive_seed(seed, "properties"));

  auto random_graph = [&](std::vector<CompiledGraph>& graphs, std::vector<PayloadSet>& inputs) {
    if (rng.uniform() < 0.6) {
      const Sample& s = samples[rng.uniform_int(0, samples.size() - 1)];
      graphs.push_back(compile(ComputationGraph(s.graph)));
      inputs.push_back(s.inputs);
      return;
    }
    ComputationGraph g = ComputationGraph::create(
        "random", rng.uniform() < 0.5 ? DelayClass::kSensitive : DelayClass::kTolerant);
    const std::size_t n = rng.uniform_int(1, 10);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<NodeId> deps;
      for (std::size_t j = 0; j < i; ++j) {
        if (rng.uniform() < 0.3) deps.push_back(static_cast<NodeId>(j));
      }
      const OpTag tag = kinds[rng.uniform_int(0, std::size(kinds) - 1)];
      Params p;
      if (tag == OpTag::kSplit) p["parts"] = static_cast<double>(rng.uniform_int(1, 3));
      if (tag == OpTag::kDownsample) p["k"] = static_cast<double>(rng.uniform_int(1, 4));
      if (tag == OpTag::kEncrypt || tag == OpTag::kDecrypt) p["key"] = static_cast<double>(rng.uniform_int(0, 99));
      if (tag == OpTag::kTrain || tag == OpTag::kEvaluate) p["iters"] = 2;
      g.connect_nodes(tag, deps, p);
    }
    graphs.push_back(compile(g));
    PayloadSet in;
    for (std::size_t i = 0; i < graphs.back().sources().size(); ++i) {
      Bytes b(rng.uniform_int(0, 300));
      for (auto& x : b) x = static_cast<std::uint8_t>(rng.next());
      in.emplace_back(std::move(b));
    }
    inputs.push_back(std::move(in));
  };

  PropertyStats st;
  for (int c = 0; c < kPropertyCases; ++c) {
    const int mode = static_cast<int>(rng.uniform_int(0, 4));  // remodel, mix seq/par, hybrid seq/par
    const int level = static_cast<int>(rng.uniform_int(kMinLevel, kMaxLevel));
    const FeatureMask mask = masks[rng.uniform_int(0, std::size(masks) - 1)];
    const std::size_t b = mode == 0 ? 1 : rng.uniform_int(1, 5);
    const unsigned workers = static_cast<unsigned>(rng.uniform_int(2, 4));
    const bool par = mode == 2 || mode == 4;
    const Clock clock = rng.uniform() < 0.2 ? Clock::wall() : Clock::simulated();
    const std::uint64_t case_seed = rng.next();
    std::vector<CompiledGraph> graphs;
    std::vector<PayloadSet> inputs;
    for (std::size_t i = 0; i < b; ++i) random_graph(graphs, inputs);

    std::vector<PayloadSet> got;
    const std::string where = "case " + std::to_string(c);
    if (mode == 0) {
      const AnonymizedGraph ag = anonymize_remodel(graphs[0], level, mask, case_seed, clock.costs);
      const SingleRun run = execute_single(ag.graph, inputs[0], clock, case_seed);
      got.push_back(strip_outputs(run.outputs, run.strip));
      check_schedule(st, run.schedule, std::span(&ag.graph, 1), where);
    } else if (mode <= 2) {
      const MixBatch batch = MixBatch::with_default_weights(graphs, inputs, case_seed);
      const MixResult r = par ? mix_parallel(batch, workers, clock) : mix_sequential(batch, clock);
      for (std::size_t i = 0; i < b; ++i) got.push_back(strip_outputs(r.outputs[i], r.strip_maps[i]));
      check_schedule(st, r.schedule, graphs, where);
    } else {
      AnonymizationPlan plan;
      plan.mode = Mode::kHybrid;
      plan.level = level;
      plan.mask = mask;
      plan.batch_size = b;
      plan.parallel = par;
      plan.workers = workers;
      plan.seed = case_seed;
      const HybridResult r = anonymize_hybrid(graphs, inputs, plan, clock);
      got = r.outputs;
      std::vector<CompiledGraph> anon;
      for (const auto& ag : r.anonymized) anon.push_back(ag.graph);
      check_schedule(st, r.schedule, anon, where);
    }
    ++st.cases;
    for (std::size_t i = 0; i < b; ++i) {
      const PayloadSet want = execute_single(graphs[i], inputs[i], Clock::simulated(), case_seed).outputs;
      bool same = want.size() == got[i].size();
      for (std::size_t k = 0; same && k < want.size(); ++k) {
        same = want[k].logical_len() == got[i][k].logical_len() && want[k].padding() == 0 &&
               got[i][k].padding() == 0 && std::ranges::equal(want[k].logical(), got[i][k].logical());
      }
      if (!same) {
        ++st.output_failures;
        if (st.first_failure.empty()) st.first_failure = where + ": outputs differ";
        break;
      }
    }
  }
  return st;
}

Outcome semantic_preservation(const PropertyStats& st) {
  Outcome o;
  o.detail << st.cases << " randomized cases, " << st.output_failures << " output mismatches";
  o.require(st.cases >= kPropertyCases, "fewer than 1000 cases");
  o.require(st.output_failures == 0, st.first_failure);
  return o;
}

ComputationGraph unit_chain(std::size_t n, DelayClass dc) {
  ComputationGraph g = ComputationGraph::create("unit", dc);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<NodeId> deps;
    if (i > 0) deps.push_back(static_cast<NodeId>(i - 1));
    g.connect_nodes(OpKind::custom("u" + std::to_string(i)), deps);
  }
  return g;
}

Outcome scheduler_correctness(const PropertyStats& st, std::uint64_t seed) {
  Outcome o;
  o.detail << st.schedules << " schedules validated, " << st.schedule_failures << " rejected; ";
  o.require(st.schedule_failures == 0, st.first_failure);

  const std::vector<double> w{3, 1, 1, 3};
  const std::vector<std::vector<NodeId>> fr(w.size(), std::vector<NodeId>{0});
  Rng rng(derive_seed(seed, "chi-square"));
  std::vector<double> counts(w.size(), 0);
  for (int i = 0; i < kPickDraws; ++i) ++counts[pick_next(fr, w, rng).graph];
  const double chi2 = oracle::chi_square(counts, w);
  const double crit = oracle::chi_square_critical_001(static_cast<int>(w.size()) - 1);
  o.detail << "pick_next chi2 " << num(chi2, "%.2f") << " < " << num(crit, "%.3f") << "; ";
  o.require(chi2 < crit, "chi-square rejects pick_next at 0.01");

  // Equal-cost graphs under a unit cost model; even slots delay-sensitive.
  const Clock unit = Clock::simulated(CostModel::uniform({1.0, 0.0, 1.0, 16.0, 0.0}));
  int wins = 0, losses = 0;
  for (int run = 0; run < kSignRuns; ++run) {
    std::vector<CompiledGraph> graphs;
    std::vector<PayloadSet> inputs;
    for (int i = 0; i < 4; ++i) {
      graphs.push_back(compile(unit_chain(4, i % 2 == 0 ? DelayClass::kSensitive : DelayClass::kTolerant)));
      inputs.push_back({Payload(Bytes{1, 2, 3})});
    }
    const MixBatch batch =
        MixBatch::with_default_weights(graphs, inputs, derive_seed(seed, "sign-" + std::to_string(run)));
    const MixResult r = mix_sequential(batch, unit);
    std::vector<double> end(4, 0.0);
    for (const auto& e : r.schedule.entries) end[e.graph] = std::max(end[e.graph], e.end_ms);
    std::vector<std::size_t> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return end[a] != end[b] ? end[a] < end[b] : a < b;
    });
    double rank_s = 0, rank_t = 0;
    for (std::size_t rank = 0; rank < 4; ++rank) (order[rank] % 2 == 0 ? rank_s : rank_t) += rank;
    wins += rank_s < rank_t;
    losses += rank_s > rank_t;
  }
  const double p = oracle::sign_test_p(wins, wins + losses);
  o.detail << "priority sign test " << wins << ":" << losses << " p=" << num(p, "%.2g");
  o.require(p < kSignAlpha, "sign test p >= 0.01");
  return o;
}

Dataset blobs(std::size_t classes, std::size_t per_class, std::size_t dims, double spread, Rng& rng) {
  Dataset ds;
  for (std::size_t j = 0; j < dims; ++j) ds.feature_names.push_back("f" + std::to_string(j));
  std::vector<Row> centres(classes, Row(dims));
  for (auto& c : centres) {
    for (double& v : c) v = rng.uniform(-5.0, 5.0);
  }
  std::size_t id = 0;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      Row r = centres[c];
      for (double& v : r) v += spread * (rng.uniform() - 0.5);
      ds.rows.push_back(r);
      ds.labels.push_back("c" + std::to_string(c));
      ds.ids.push_back(id++);
    }
  }
  return ds;
}

Outcome classifier_oracles(std::uint64_t seed) {
  Outcome o;
  Rng rng(derive_seed(seed, "oracles"));
  int knn_checked = 0, knn_mismatch = 0;
  for (int k : {1, 3, 5, 7}) {
    const Dataset train = blobs(10, 20, 4, 8.0, rng);  // 200 rows
    const Dataset probe = blobs(10, 10, 4, 12.0, rng);
    const Split s = split_stratified(train, 0.7, rng.next());
    const auto model = fit(ModelSpec::knn(k), s.train, 0);
    std::vector<Row> normalized;
    for (const auto& row : s.train.rows) normalized.push_back(s.train.normalization->apply(row));
    for (const auto& q : probe.rows) {
      ++knn_checked;
      knn_mismatch += model->predict(q) != oracle::knn(normalized, s.train.labels, s.train.normalization->apply(q), k);
    }
    const auto raw = fit(ModelSpec::knn(k), train, 0);
    for (const auto& q : probe.rows) {
      ++knn_checked;
      knn_mismatch += raw->predict(q) != oracle::knn(train.rows, train.labels, q, k);
    }
  }
  o.detail << "kNN " << knn_checked - knn_mismatch << "/" << knn_checked << " match oracle; ";
  o.require(knn_mismatch == 0, "kNN disagrees with brute force");

  double worst = 0;
  for (int trial = 0; trial < 5; ++trial) {
    ModelSpec spec = ModelSpec::mlp();
    spec.hidden_units = 4 + trial;
    MlpModel net = MlpModel::untrained(spec, 3, {"a", "b", "c"}, rng.next());
    std::vector<Row> x(5, Row(3));
    for (auto& r : x) {
      for (double& v : r) v = rng.uniform(-1.0, 1.0);
    }
    const std::vector<int> y{0, 1, 2, 1, 0};
    const oracle::GradientCheck g = oracle::mlp_gradient(net, x, y);
    worst = std::max({worst, g.max_rel_err, g.norm_rel_err});
  }
  o.detail << "MLP gradient max rel err " << num(worst, "%.2e") << "; ";
  o.require(worst < kGradRelErr, "MLP gradient rel err >= 1e-4");

  int leaves = 0, impure = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset ds = blobs(8, 25, 3, 10.0, rng);
    DecisionTreeModel tree(ModelSpec::decision_tree(), ds);
    std::map<int, std::set<std::string>> seen;
    for (std::size_t i = 0; i < ds.size(); ++i) seen[tree.leaf_of(ds.rows[i])].insert(ds.labels[i]);
    for (const auto& [leaf, labels] : seen) {
      ++leaves;
      impure += labels.size() != 1;
    }
  }
  o.detail << "decision tree " << leaves - impure << "/" << leaves << " leaves pure";
  o.require(impure == 0, "impure decision-tree leaf");
  return o;
}

// ---- determinism ------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const fs::path& a, const fs::path& b) {
  Outcome o;
  // Wall-clock timing files are the only outputs allowed to differ.
  const std::set<std::string> skip{"timing.csv", "timing_report.txt"};
  int compared = 0, differ = 0;
  std::string first;
  std::set<std::string> seen;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || skip.count(e.path().filename().string())) continue;
    const fs::path rel = fs::relative(e.path(), a);
    seen.insert(rel.string());
    ++compared;
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) {
      ++differ;
      if (first.empty()) first = rel.string();
    }
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (!e.is_regular_file() || skip.count(e.path().filename().string())) continue;
    if (!seen.count(fs::relative(e.path(), b).string())) {
      ++differ;
      if (first.empty()) first = fs::relative(e.path(), b).string();
    }
  }
  o.detail << compared << " files compared (report.txt, report.json, summary.csv, overhead.csv, features, dataset), "
           << differ << " differ";
  o.require(compared > 0, "nothing compared");
  o.require(differ == 0, "first difference in " + first);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string work = "acceptance_work";
  std::uint64_t seed = 20260101;
  std::string cost_model;
  app.add_option("--work", work, "scratch directory")->capture_default_str();
  app.add_option("--seed", seed, "master seed")->capture_default_str();
  app.add_option("--cost-model", cost_model, "cost model JSON")->required();
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  auto emit = [&](int id, const char* title, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "error: " << e.what();
    }
    failures += !o.pass;
    report(id, title, o);
  };

  try {
    const Clock clock = Clock::simulated(load_cost_model(cost_model));
    const fs::path root(work);
    run_pipeline(root / "run1", seed, clock);
    run_pipeline(root / "run2", seed, clock);
    const Results r(root / "run1" / "results");

    emit(1, "Baseline attacker strength", [&] { return baseline_strength(r); });
    emit(2, "Remodeling effectiveness", [&] { return remodel_effectiveness(r); });
    emit(3, "Feature-ablation ordering", [&] { return feature_ablation(r); });
    emit(4, "Mixing effectiveness", [&] { return mixing_effectiveness(r); });
    emit(5, "Overhead trends", [&] { return overhead_trends(r); });
    emit(6, "Anonymization-cost ordering", [&] { return anonymization_cost_order(r); });
    emit(7, "Hybrid dominance", [&] { return hybrid_dominance(r); });
    emit(8, "Adaptive attacker", [&] { return adaptive_attacker(r); });
    const PropertyStats props = semantic_property_suite(seed);
    emit(9, "Semantic preservation", [&] { return semantic_preservation(props); });
    emit(10, "Scheduler correctness", [&] { return scheduler_correctness(props, seed); });
    emit(11, "Classifier oracles", [&] { return classifier_oracles(seed); });
    emit(12, "Determinism", [&] { return determinism(root / "run1", root / "run2"); });
  } catch (const std::exception& e) {
    std::printf("FAIL pipeline: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

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


#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "shroud/mixing.hpp"
#include "shroud/remodel.hpp"
#include "shroud/workloads.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace shroud;
using shroud::testing::chain;
using shroud::testing::diamond;

namespace {

// Custom identity nodes under a unit cost model, so spans count nodes.
const Clock kUnitClock = Clock::simulated(CostModel::uniform({1.0, 0.0, 1.0, 16.0, 0.0}));

ComputationGraph unit_chain(std::size_t n, DelayClass dc, const std::string& label = "unit") {
  ComputationGraph g = ComputationGraph::create(label, dc);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<NodeId> deps;
    if (i > 0) deps.push_back(static_cast<NodeId>(i - 1));
    g.connect_nodes(OpKind::custom("u" + std::to_string(i)), deps);
  }
  return g;
}

ComputationGraph unit_fan(std::size_t width) {
  ComputationGraph g = ComputationGraph::create("fan", DelayClass::kTolerant);
  std::vector<NodeId> mids;
  for (std::size_t i = 0; i < width; ++i) mids.push_back(g.connect_nodes(OpKind::custom("u" + std::to_string(i)), {}));
  g.connect_nodes(OpKind::custom("join"), mids);
  return g;
}

PayloadSet unit_inputs(const CompiledGraph& cg) {
  return PayloadSet(cg.sources().size(), Payload(Bytes{1, 2, 3}));
}

MixBatch make_batch(std::vector<CompiledGraph> graphs, std::uint64_t seed, std::uint64_t input_seed = 3) {
  Rng rng(input_seed);
  std::vector<PayloadSet> inputs;
  for (const auto& g : graphs) inputs.push_back(shroud::testing::random_inputs(rng, g, 32, 256));
  return MixBatch::with_default_weights(std::move(graphs), std::move(inputs), seed);
}

double makespan(const Schedule& s) {
  double m = 0;
  for (const auto& e : s.entries) m = std::max(m, e.end_ms);
  return m;
}

}  // namespace

TEST_CASE("pick_next frequencies") {
  SUBCASE("weights 3:1") {
    const std::vector<std::vector<NodeId>> fr{{0, 2}, {1}};
    const std::vector<double> w{3, 1};
    Rng rng(1);
    int zero = 0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) {
      const Pick p = pick_next(fr, w, rng);
      CHECK(p.node == fr[p.graph].front());
      zero += p.graph == 0;
    }
    CHECK(std::abs(zero / double(kDraws) - 0.75) < 0.02);
  }
  SUBCASE("single ready graph") {
    const std::vector<std::vector<NodeId>> fr{{}, {4, 7}, {}};
    const std::vector<double> w{5, 1, 5};
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) CHECK(pick_next(fr, w, rng) == Pick{1, 4});
  }
  SUBCASE("chi-square goodness of fit") {
    const std::vector<std::vector<double>> cases{{1, 1, 1, 1}, {3, 1}, {3, 1, 1, 3}, {5, 2, 1}};
    std::uint64_t seed = 10;
    for (const auto& w : cases) {
      const std::vector<std::vector<NodeId>> fr(w.size(), std::vector<NodeId>{0});
      Rng rng(seed++);
      std::vector<double> counts(w.size(), 0);
      constexpr int kDraws = 100000;
      for (int i = 0; i < kDraws; ++i) ++counts[pick_next(fr, w, rng).graph];
      CHECK(oracle::chi_square(counts, w) <
            oracle::chi_square_critical_001(static_cast<int>(w.size()) - 1));
      if (w == std::vector<double>{1, 1, 1, 1}) {
        for (double c : counts) CHECK(std::abs(c / kDraws - 0.25) < 0.02);
      }
    }
  }
  SUBCASE("exhausted") {
    const std::vector<std::vector<NodeId>> fr{{}, {}};
    const std::vector<double> w{1, 1};
    Rng rng(1);
    CHECK_THROWS_CODE(pick_next(fr, w, rng), ErrorCode::kExhausted);
  }
}

TEST_CASE("batch of one equals single execution") {
  const auto suite = default_class_suite();
  for (const auto& cls : suite) {
    const CompiledGraph cg = compile(cls.build());
    MixBatch b = make_batch({cg}, 77);
    const SingleRun ref = execute_single(cg, b.inputs[0], Clock::simulated(), 77);
    const MixResult seq = mix_sequential(b, Clock::simulated());
    CHECK(seq.schedule == ref.schedule);
    CHECK(seq.records[0] == ref.record);
    CHECK(seq.outputs[0] == ref.outputs);
    CHECK(seq.stats.selections == cg.size());
    CHECK(seq.stats.candidates_scanned == cg.size());
  }
}

TEST_CASE("sequential mixing stretches spans and keeps memory") {
  for (std::size_t b = 2; b <= 5; ++b) {
    std::vector<CompiledGraph> graphs;
    for (std::size_t i = 0; i < b; ++i) graphs.push_back(compile(unit_chain(2 + i, DelayClass::kTolerant)));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      MixBatch batch = make_batch(graphs, seed);
      const MixResult r = mix_sequential(batch, kUnitClock);
      REQUIRE(validate_schedule(r.schedule, batch.graphs));
      for (std::size_t i = 0; i < b; ++i) {
        const SingleRun ref = execute_single(graphs[i], batch.inputs[i], kUnitClock, seed);
        CHECK(r.records[i].completion_time_ms >= ref.record.completion_time_ms);
        CHECK(normalized_overheads(r.records[i], ref.record).mem_ratio == 1.0);
        CHECK(r.records[i].cpu_busy_ms == ref.record.cpu_busy_ms);
      }
      for (std::size_t k = 1; k < r.schedule.entries.size(); ++k) {
        CHECK(r.schedule.entries[k].start_ms >= r.schedule.entries[k - 1].end_ms);
      }
    }
  }
}

TEST_CASE("parallel mixing") {
  SUBCASE("independent unit graphs finish no later than sequentially") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      MixBatch batch = make_batch({compile(unit_chain(1, DelayClass::kTolerant)),
                                   compile(unit_chain(1, DelayClass::kSensitive))},
                                  seed);
      const double par = makespan(mix_parallel(batch, 2, kUnitClock).schedule);
      const double seq = makespan(mix_sequential(batch, kUnitClock).schedule);
      CHECK(par <= seq);
      CHECK(par == doctest::Approx(1.0));
    }
  }
  SUBCASE("a lone chain keeps its span") {
    const CompiledGraph cg = compile(unit_chain(6, DelayClass::kTolerant));
    MixBatch batch = make_batch({cg}, 4);
    const MixResult r = mix_parallel(batch, 2, kUnitClock);
    CHECK(r.records[0].completion_time_ms ==
          execute_single(cg, batch.inputs[0], kUnitClock, 4).record.completion_time_ms);
  }
  SUBCASE("a wide graph can finish faster than alone") {
    const CompiledGraph cg = compile(unit_fan(4));
    MixBatch batch = make_batch({cg}, 4);
    const MixResult r = mix_parallel(batch, 2, kUnitClock);
    CHECK(r.records[0].completion_time_ms <
          execute_single(cg, batch.inputs[0], kUnitClock, 4).record.completion_time_ms);
  }
  SUBCASE("deterministic under the simulated clock") {
    const auto samples = generate_dataset(default_class_suite(), 1, 3);
    std::vector<CompiledGraph> graphs;
    std::vector<PayloadSet> inputs;
    for (std::size_t i = 0; i < 4; ++i) {
      graphs.push_back(compile(ComputationGraph(samples[i].graph)));
      inputs.push_back(samples[i].inputs);
    }
    const MixBatch batch = MixBatch::with_default_weights(graphs, inputs, 5);
    const MixResult a = mix_parallel(batch, 3, Clock::simulated());
    const MixResult b = mix_parallel(batch, 3, Clock::simulated());
    CHECK(a.schedule == b.schedule);
    CHECK(a.records == b.records);
  }
  SUBCASE("needs two workers") {
    MixBatch batch = make_batch({compile(diamond())}, 1);
    CHECK_THROWS_CODE(mix_parallel(batch, 1, Clock::simulated()), ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("schedules validate and outputs match unmixed runs") {
  const auto suite = default_class_suite();
  const auto samples = generate_dataset(suite, 2, 12);
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t b = rng.uniform_int(1, 6);
    std::vector<CompiledGraph> graphs;
    std::vector<PayloadSet> inputs;
    for (std::size_t i = 0; i < b; ++i) {
      if (rng.uniform() < 0.5) {
        const auto& s = samples[rng.uniform_int(0, samples.size() - 1)];
        graphs.push_back(compile(ComputationGraph(s.graph)));
        inputs.push_back(s.inputs);
      } else {
        graphs.push_back(compile(shroud::testing::random_dag(rng, rng.uniform_int(1, 9), 0.3)));
        inputs.push_back(shroud::testing::random_inputs(rng, graphs.back()));
      }
    }
    const std::uint64_t seed = rng.next();
    const MixBatch batch = MixBatch::with_default_weights(graphs, inputs, seed);
    const MixResult seq = mix_sequential(batch, Clock::simulated());
    const unsigned workers = static_cast<unsigned>(rng.uniform_int(2, 4));
    const MixResult par = mix_parallel(batch, workers, Clock::simulated());
    const MixResult wall = mix_parallel(batch, workers, Clock::wall());
    CHECK(validate_schedule(seq.schedule, graphs).ok);
    const ScheduleCheck pc = validate_schedule(par.schedule, graphs);
    CHECK_MESSAGE(pc.ok, pc.reason);
    const ScheduleCheck wc = validate_schedule(wall.schedule, graphs);
    CHECK_MESSAGE(wc.ok, wc.reason);
    for (std::size_t i = 0; i < b; ++i) {
      const SingleRun ref = execute_single(graphs[i], inputs[i], Clock::simulated(), seed);
      CHECK(seq.outputs[i] == ref.outputs);
      CHECK(par.outputs[i] == ref.outputs);
      CHECK(wall.outputs[i] == ref.outputs);
    }
  }
}

TEST_CASE("delay-sensitive graphs complete earlier") {
  constexpr int kRuns = 200;
  int wins = 0;
  int losses = 0;
  for (int run = 0; run < kRuns; ++run) {
    std::vector<CompiledGraph> graphs;
    for (int i = 0; i < 4; ++i) {
      graphs.push_back(compile(unit_chain(4, i % 2 == 0 ? DelayClass::kSensitive : DelayClass::kTolerant)));
    }
    std::vector<PayloadSet> inputs;
    for (const auto& g : graphs) inputs.push_back(unit_inputs(g));
    const MixBatch batch = MixBatch::with_default_weights(graphs, inputs, derive_seed(99, run));
    REQUIRE(batch.weights[0] == kSensitiveWeight);
    REQUIRE(batch.weights[1] == kTolerantWeight);
    const MixResult r = mix_sequential(batch, kUnitClock);
    std::vector<double> end(4, 0.0);
    for (const auto& e : r.schedule.entries) end[e.graph] = std::max(end[e.graph], e.end_ms);
    std::vector<std::size_t> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return end[a] < end[b]; });
    double rank_s = 0;
    double rank_t = 0;
    for (std::size_t rank = 0; rank < 4; ++rank) (order[rank] % 2 == 0 ? rank_s : rank_t) += rank;
    wins += rank_s < rank_t;
    losses += rank_s > rank_t;
  }
  const int n = wins + losses;
  CHECK(wins > losses);
  CHECK(oracle::sign_test_p(wins, n) < 0.01);
}

TEST_CASE("decision cost") {
  const CompiledGraph cg = compile(diamond());
  std::uint64_t prev_scanned = 0;
  for (std::size_t b = 1; b <= 6; ++b) {
    std::vector<CompiledGraph> graphs(b, cg);
    MixBatch batch = make_batch(graphs, b);
    const MixResult r = mix_sequential(batch, Clock::simulated());
    // Every selection scans each graph's frontier once.
    CHECK(r.stats.selections == b * cg.size());
    CHECK(r.stats.candidates_scanned == b * b * cg.size());
    CHECK(r.stats.candidates_scanned / b >= prev_scanned);
    prev_scanned = r.stats.candidates_scanned / b;
    const std::vector<double> cost = anonymization_cost(batch);
    CHECK(cost.size() == b);
    for (double c : cost) CHECK(c >= 0.0);
  }
}

TEST_CASE("batch validation") {
  MixBatch empty;
  CHECK_THROWS_CODE(empty.validate(), ErrorCode::kInvalidArgument);
  MixBatch b = make_batch({compile(diamond())}, 1);
  b.weights[0] = 0.0;
  CHECK_THROWS_CODE(b.validate(), ErrorCode::kInvalidArgument);
  b = make_batch({compile(diamond())}, 1);
  b.inputs.clear();
  CHECK_THROWS(b.validate());
}

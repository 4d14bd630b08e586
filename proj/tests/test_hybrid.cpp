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


#include "doctest.h"
#include "shroud/hybrid.hpp"
#include "shroud/workloads.hpp"
#include "test_util.hpp"

using namespace shroud;
using shroud::testing::diamond;

namespace {

struct Batch {
  std::vector<CompiledGraph> graphs;
  std::vector<PayloadSet> inputs;
};

Batch sample_batch(std::size_t b, std::uint64_t seed) {
  const auto samples = generate_dataset(default_class_suite(), 1, seed);
  Batch out;
  Rng rng(seed);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& s = samples[rng.uniform_int(0, samples.size() - 1)];
    out.graphs.push_back(compile(ComputationGraph(s.graph)));
    out.inputs.push_back(s.inputs);
  }
  return out;
}

}  // namespace

TEST_CASE("hybrid preserves semantics") {
  std::uint64_t seed = 1;
  for (std::size_t b = 1; b <= 5; ++b) {
    for (int level = kMinLevel; level <= kMaxLevel; ++level) {
      for (const bool par : {false, true}) {
        const Batch batch = sample_batch(b, seed);
        AnonymizationPlan plan;
        plan.mode = Mode::kHybrid;
        plan.level = level;
        plan.batch_size = b;
        plan.parallel = par;
        plan.workers = 2;
        plan.seed = seed++;
        const HybridResult r = anonymize_hybrid(batch.graphs, batch.inputs, plan, Clock::simulated());
        REQUIRE(r.outputs.size() == b);
        std::vector<CompiledGraph> anon;
        for (const auto& ag : r.anonymized) anon.push_back(ag.graph);
        const ScheduleCheck check = validate_schedule(r.schedule, anon);
        CHECK_MESSAGE(check.ok, check.reason);
        for (std::size_t i = 0; i < b; ++i) {
          const SingleRun ref = execute_single(batch.graphs[i], batch.inputs[i], Clock::simulated(), plan.seed);
          CHECK(r.outputs[i] == ref.outputs);
          CHECK(r.anonymized[i].graph.fake_node_count() ==
                fake_node_budget(level, batch.graphs[i].size()));
        }
        CHECK(r.remodel_ms.size() == b);
        CHECK(r.decision_ms.size() == b);
      }
    }
  }
}

TEST_CASE("hybrid with an empty mask and one graph is a plain run") {
  const CompiledGraph cg = compile(diamond());
  const std::vector<CompiledGraph> graphs{cg};
  const std::vector<PayloadSet> inputs{{Payload(Bytes(300, 7))}};
  AnonymizationPlan plan;
  plan.mode = Mode::kHybrid;
  plan.level = 4;
  plan.mask = FeatureMask::none();
  plan.seed = 31;
  const HybridResult r = anonymize_hybrid(graphs, inputs, plan, Clock::simulated());
  const SingleRun ref = execute_single(cg, inputs[0], Clock::simulated(), 31);
  CHECK(r.records[0] == ref.record);
  CHECK(r.schedule == ref.schedule);
  CHECK(r.outputs[0] == ref.outputs);
}

TEST_CASE("hybrid equals remodel then mix") {
  const Batch batch = sample_batch(3, 12);
  AnonymizationPlan plan;
  plan.mode = Mode::kHybrid;
  plan.level = 3;
  plan.batch_size = 3;
  plan.seed = 8;
  const HybridResult r = anonymize_hybrid(batch.graphs, batch.inputs, plan, Clock::simulated());
  MixBatch mb;
  mb.seed = plan.seed;
  for (std::size_t i = 0; i < 3; ++i) {
    mb.graphs.push_back(anonymize_remodel(batch.graphs[i], 3, plan.mask, derive_seed(plan.seed, i)).graph);
    mb.weights.push_back(default_weight(batch.graphs[i].graph().delay_class()));
    mb.inputs.push_back(batch.inputs[i]);
  }
  const MixResult m = mix_sequential(mb, Clock::simulated());
  CHECK(r.records == m.records);
  CHECK(r.schedule == m.schedule);
  // Busy time is per-node work, so it adds up the same way with or without mixing.
  for (std::size_t i = 0; i < 3; ++i) {
    const SingleRun alone = execute_single(mb.graphs[i], mb.inputs[i], Clock::simulated(), plan.seed);
    CHECK(r.records[i].cpu_busy_ms == doctest::Approx(alone.record.cpu_busy_ms));
    CHECK(r.records[i].completion_time_ms >= alone.record.completion_time_ms);
  }
}

TEST_CASE("hybrid rejects bad batches") {
  AnonymizationPlan plan;
  plan.mode = Mode::kHybrid;
  CHECK_THROWS_CODE(anonymize_hybrid({}, {}, plan, Clock::simulated()), ErrorCode::kInvalidArgument);
  const std::vector<CompiledGraph> graphs{compile(diamond())};
  CHECK_THROWS_CODE(anonymize_hybrid(graphs, {}, plan, Clock::simulated()), ErrorCode::kInvalidArgument);
  const std::vector<PayloadSet> inputs{{Payload(Bytes{1})}};
  plan.parallel = true;
  plan.workers = 1;
  CHECK_THROWS_CODE(anonymize_hybrid(graphs, inputs, plan, Clock::simulated()), ErrorCode::kInvalidArgument);
}

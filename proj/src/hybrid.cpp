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

#include "shroud/hybrid.hpp"

#include <chrono>

#include "shroud/error.hpp"

namespace shroud {

HybridResult anonymize_hybrid(std::span<const CompiledGraph> graphs,
                              std::span<const PayloadSet> inputs, const AnonymizationPlan& plan,
                              const Clock& clock) {
  plan.validate();
  if (graphs.empty()) throw Error(ErrorCode::kInvalidArgument, "hybrid batch is empty");
  if (inputs.size() != graphs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "inputs must match the batch size");
  }
  HybridResult out;
  MixBatch batch;
  batch.seed = plan.seed;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    AnonymizedGraph ag =
        anonymize_remodel(graphs[i], plan.level, plan.mask, derive_seed(plan.seed, i), clock.costs);
    out.remodel_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    batch.graphs.push_back(ag.graph);
    batch.weights.push_back(plan.weight_for(graphs[i].graph().delay_class()));
    batch.inputs.push_back(inputs[i]);
    out.anonymized.push_back(std::move(ag));
  }
  MixResult mixed = plan.parallel ? mix_parallel(batch, plan.workers, clock)
                                  : mix_sequential(batch, clock);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    out.outputs.push_back(strip_outputs(mixed.outputs[i], mixed.strip_maps[i]));
  }
  out.records = std::move(mixed.records);
  out.schedule = std::move(mixed.schedule);
  out.decision_ms = std::move(mixed.decision_ms);
  return out;
}

}  // namespace shroud

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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shroud/executor.hpp"
#include "shroud/mixing.hpp"
#include "shroud/remodel.hpp"

namespace shroud {

struct HybridResult {
  std::vector<PayloadSet> outputs;  // stripped
  std::vector<FeatureRecord> records;
  Schedule schedule;
  std::vector<double> remodel_ms;    // per graph, wall clock
  std::vector<double> decision_ms;   // per graph, wall clock
  std::vector<AnonymizedGraph> anonymized;
};

// Remodels every graph (level, mask) and then mixes the remodeled batch,
// sequentially or on plan.workers threads per plan.parallel. Graph i is
// remodeled with seed derive_seed(plan.seed, i); weights follow each graph's
// delay class unless plan.weight is set.
HybridResult anonymize_hybrid(std::span<const CompiledGraph> graphs,
                              std::span<const PayloadSet> inputs, const AnonymizationPlan& plan,
                              const Clock& clock);

}  // namespace shroud

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
#include "shroud/graph.hpp"
#include "shroud/payload.hpp"
#include "shroud/rng.hpp"

namespace shroud {

struct MixBatch {
  std::vector<CompiledGraph> graphs;
  std::vector<double> weights;
  std::vector<PayloadSet> inputs;
  // Drives node-selection randomness and each graph's kernel seeds; a graph's
  // outputs equal execute_single(graph, inputs, clock, seed).
  std::uint64_t seed = 0;

  // Weights from each graph's delay class.
  static MixBatch with_default_weights(std::vector<CompiledGraph> graphs,
                                       std::vector<PayloadSet> inputs, std::uint64_t seed);
  void validate() const;
};

struct Pick {
  std::size_t graph = 0;
  NodeId node = 0;
  friend bool operator==(const Pick&, const Pick&) = default;
};

struct PickStats {
  std::uint64_t selections = 0;
  std::uint64_t candidates_scanned = 0;
};

// Picks graph i with probability w_i / sum(w_j) over graphs whose frontier
// is non-empty, then that graph's lowest ready id. Frontiers must be sorted
// ascending. exhausted-error when every frontier is empty.
Pick pick_next(std::span<const std::vector<NodeId>> frontiers, std::span<const double> weights,
               Rng& rng, PickStats* stats = nullptr);

struct MixResult {
  std::vector<PayloadSet> outputs;
  std::vector<StripMap> strip_maps;
  std::vector<FeatureRecord> records;
  Schedule schedule;
  // anonymization_cost() of the batch.
  std::vector<double> decision_ms;
  PickStats stats;
};

// One worker interleaves all graphs.
MixResult mix_sequential(const MixBatch& batch, const Clock& clock);

// `workers` threads share one frontier. Under the simulated clock the
// schedule is a deterministic list schedule in virtual time: the worker with
// the earliest virtual clock picks next, among nodes whose producers finished
// by then; kernels still run concurrently on the worker threads. Under the
// wall clock, workers race and the schedule records real time.
MixResult mix_parallel(const MixBatch& batch, unsigned workers, const Clock& clock);

// Per-graph wall-clock selection cost of one sequential mixing order: the
// pick_next calls plus frontier updates, with no kernels run, timed as one
// loop (fastest of three) and split by each graph's share of the picks.
std::vector<double> anonymization_cost(const MixBatch& batch);

}  // namespace shroud

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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shroud/graph.hpp"
#include "shroud/payload.hpp"

namespace shroud {

// One node of a class template; deps index earlier steps.
struct TemplateStep {
  OpKind kind;
  std::vector<NodeId> deps;
  Params params;
};

// A labeled computation class: fixed topology, input sizes drawn uniformly
// from [input_min, input_max] bytes per source.
struct WorkloadClass {
  std::string name;
  DelayClass delay_class = DelayClass::kTolerant;
  std::vector<TemplateStep> steps;
  std::size_t input_min = 1;
  std::size_t input_max = 1;

  ComputationGraph build() const;
};

struct Sample {
  ComputationGraph graph;
  PayloadSet inputs;
};

// samples_per_class instances per class, class-major order.
std::vector<Sample> generate_dataset(std::span<const WorkloadClass> spec,
                                     std::size_t samples_per_class, std::uint64_t seed);

// Ten built-in classes mixing the algorithmic and ML-style kinds.
std::vector<WorkloadClass> default_class_suite();

struct SuiteStats {
  double mean_nodes = 0.0;
  double stddev_nodes = 0.0;
  double mean_degree = 0.0;  // 2|E| / |V| pooled over the suite
};
SuiteStats suite_stats(std::span<const WorkloadClass> suite);

// Directory layout: manifest.json, graphs/NNNNNN.json, payloads/NNNNNN_K.bin
// with a NNNNNN_K.bin.len sidecar holding the logical length.
void write_dataset(const std::filesystem::path& dir, std::span<const Sample> samples);
std::vector<Sample> read_dataset(const std::filesystem::path& dir);

}  // namespace shroud

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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shroud/executor.hpp"
#include "shroud/graph.hpp"
#include "shroud/rng.hpp"

namespace shroud {

struct FeatureMask {
  bool pad_inputs = false;
  bool pad_outputs = false;
  bool anonymize_time = false;

  static constexpr FeatureMask all() { return {true, true, true}; }
  static constexpr FeatureMask none() { return {}; }
  bool empty() const { return !pad_inputs && !pad_outputs && !anonymize_time; }

  // "in", "out", "both", "time", "all", "none", or a '+'-joined flag list.
  static FeatureMask parse(std::string_view text);
  std::string name() const;

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

enum class Mode : std::uint8_t { kRemodeling, kMixing, kHybrid };

std::string_view mode_name(Mode m);

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 5;
inline constexpr double kSensitiveWeight = 3.0;
inline constexpr double kTolerantWeight = 1.0;
inline constexpr unsigned kDefaultWorkers = 4;

inline double default_weight(DelayClass d) {
  return d == DelayClass::kSensitive ? kSensitiveWeight : kTolerantWeight;
}

struct AnonymizationPlan {
  Mode mode = Mode::kRemodeling;
  int level = kMinLevel;
  FeatureMask mask = FeatureMask::all();
  std::size_t batch_size = 1;
  bool parallel = false;
  unsigned workers = kDefaultWorkers;
  std::optional<double> weight;  // overrides the delay-class default
  std::uint64_t seed = 0;

  // invalid-argument on level outside [1,5], batch_size 0, weight <= 0, or a
  // parallel plan with fewer than two workers.
  void validate() const;
  double weight_for(DelayClass d) const { return weight.value_or(default_weight(d)); }

  nlohmann::json to_json() const;
  static AnonymizationPlan from_json(const nlohmann::json& j);
};

struct Provenance {
  std::string class_label;
  int level = kMinLevel;
  FeatureMask mask;
  std::uint64_t seed = 0;
};

// Output padding directive for one sink; the concrete byte counts are drawn
// when the graph runs and come back as the run's StripMap.
struct OutputPadding {
  NodeId sink = 0;
  double u = 0.0;
  double cap = 0.0;
};

struct AnonymizedGraph {
  CompiledGraph graph;
  Provenance provenance;
  std::vector<OutputPadding> strip_map;
};

// Fake-node count ceil(level * |V| / 3) when time anonymization is on.
std::size_t fake_node_budget(int level, std::size_t real_nodes);

// Mean modeled node cost used to scale fake-node costs: each real node is
// priced at kReferenceInputBytes of input.
inline constexpr std::size_t kReferenceInputBytes = 1024;
double mean_node_cost_ms(const CompiledGraph& cg, const CostModel& costs);

// Inserts fake leaf nodes (cost uniform in (0, level * mean / 5]) and
// input/output padding directives (up to level * 20% of the logical length)
// according to `mask`. Logical outputs are unchanged.
AnonymizedGraph anonymize_remodel(const CompiledGraph& cg, int level, const FeatureMask& mask,
                                  std::uint64_t seed,
                                  const CostModel& costs = CostModel::defaults());

// Pre-built variants of one graph; selection is a uniform draw.
class AnonymizedPool {
 public:
  explicit AnonymizedPool(std::vector<AnonymizedGraph> variants);

  std::size_t size() const { return variants_.size(); }
  const AnonymizedGraph& at(std::size_t i) const { return variants_.at(i); }
  const AnonymizedGraph& select(Rng& rng) const;

 private:
  std::vector<AnonymizedGraph> variants_;
};

AnonymizedPool preanonymize_pool(const CompiledGraph& cg, const AnonymizationPlan& plan,
                                 std::size_t n, std::uint64_t seed,
                                 const CostModel& costs = CostModel::defaults());

// Graph JSON plus "provenance" and "strip_map".
nlohmann::json to_json(const AnonymizedGraph& ag);
AnonymizedGraph anonymized_from_json(const nlohmann::json& j);

}  // namespace shroud

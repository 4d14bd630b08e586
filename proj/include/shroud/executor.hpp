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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shroud/graph.hpp"
#include "shroud/payload.hpp"

namespace shroud {

// Simulated cost of one node of a kind, as a function of its physical input
// bytes: time = base_ms + ms_per_byte * bytes, peak memory =
// mem_base + mem_per_byte * bytes, busy time = time * cpu_fraction.
struct KindCost {
  double base_ms = 1.0;
  double ms_per_byte = 0.0;
  double cpu_fraction = 1.0;
  double mem_base = 0.0;
  double mem_per_byte = 0.0;

  friend bool operator==(const KindCost&, const KindCost&) = default;
};

class CostModel {
 public:
  // The calibrated model shipped in data/cost_model.json.
  static CostModel defaults();
  // Same cost for every kind; handy in tests.
  static CostModel uniform(const KindCost& cost);

  const KindCost& of(const OpKind& kind) const { return by_tag_[static_cast<std::size_t>(kind.tag())]; }
  void set(OpTag tag, const KindCost& cost);

  nlohmann::json to_json() const;
  static CostModel from_json(const nlohmann::json& j);

  friend bool operator==(const CostModel&, const CostModel&) = default;

 private:
  std::array<KindCost, 14> by_tag_{};
};

enum class ClockMode : std::uint8_t { kSimulated, kWallClock };

struct Clock {
  ClockMode mode = ClockMode::kSimulated;
  CostModel costs = CostModel::defaults();

  static Clock simulated(CostModel costs = CostModel::defaults()) {
    return {ClockMode::kSimulated, std::move(costs)};
  }
  static Clock wall() { return {ClockMode::kWallClock, CostModel::defaults()}; }
};

struct NodeCost {
  double time_ms = 0.0;
  double busy_ms = 0.0;
  double mem_bytes = 0.0;
};

// Modeled cost of `node` given its physical input size. Fake nodes take
// their time from params["cost_ms"].
NodeCost simulated_cost(const NodeSpec& node, std::size_t input_bytes, const CostModel& costs);

// What an observer on the host can attribute to one computation.
struct FeatureRecord {
  std::string class_label;
  std::uint64_t num_inputs = 0;
  std::uint64_t num_outputs = 0;
  std::uint64_t total_input_bytes = 0;   // physical, padding included
  std::uint64_t total_output_bytes = 0;  // physical, padding included
  double completion_time_ms = 0.0;       // own first start to own last end
  double cpu_busy_ms = 0.0;
  double peak_memory_bytes = 0.0;

  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct ScheduleEntry {
  std::size_t graph = 0;
  NodeId node = 0;
  double start_ms = 0.0;
  double end_ms = 0.0;
  std::uint32_t worker = 0;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

struct Schedule {
  std::vector<ScheduleEntry> entries;

  // Sorts by (start_ms, worker); the order the dump CSV uses.
  void canonicalize();
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct ScheduleCheck {
  bool ok = true;
  std::string reason;
  explicit operator bool() const { return ok; }
};

// Independent checker: every (graph, node) exactly once, consumers listed
// after and starting no earlier than the end of each producer, and no two
// entries of one worker overlapping in time.
ScheduleCheck validate_schedule(const Schedule& schedule, std::span<const CompiledGraph> batch);

// Per-graph I/O and per-node resource accounting that, together with a
// Schedule, determines the FeatureRecords.
struct GraphAccounting {
  std::uint64_t num_inputs = 0;
  std::uint64_t num_outputs = 0;
  std::uint64_t input_bytes = 0;
  std::uint64_t output_bytes = 0;
  std::vector<double> node_busy_ms;
  std::vector<double> node_mem_bytes;
};

std::vector<FeatureRecord> collect_features(const Schedule& schedule,
                                            std::span<const CompiledGraph> batch,
                                            std::span<const GraphAccounting> io);

struct Overheads {
  double time_ratio = 0.0;
  double cpu_ratio = 0.0;
  double mem_ratio = 0.0;
};

// anon / base per field; division-error if a base field is zero.
Overheads normalized_overheads(const FeatureRecord& anon, const FeatureRecord& base);

// Execution state of one graph: external inputs (with any padding directives
// applied), committed node outputs, and resource accounting. The mixing
// executors drive several of these at once; a node may run on any thread
// once its producers are committed.
class GraphRun {
 public:
  // input-error unless `inputs` has one payload per source node.
  GraphRun(const CompiledGraph& cg, const PayloadSet& inputs, std::uint64_t seed);

  const CompiledGraph& graph() const { return *cg_; }

  std::size_t input_bytes(NodeId node) const;
  NodeCost cost(NodeId node, const CostModel& costs) const;
  // Runs the node's kernel; reads only committed producer outputs.
  PayloadSet run(NodeId node) const;
  void commit(NodeId node, PayloadSet outputs, double busy_ms, double mem_bytes);

  struct Outcome {
    PayloadSet outputs;  // sink outputs in sink order, padding applied
    StripMap strip;      // empty when nothing was padded
    GraphAccounting accounting;
  };
  Outcome finish() const;

 private:
  const CompiledGraph* cg_;
  std::uint64_t seed_;
  std::vector<Payload> external_;  // per source, padded
  std::vector<PayloadSet> outputs_;
  std::vector<double> busy_ms_;
  std::vector<double> mem_bytes_;
};

struct SingleRun {
  PayloadSet outputs;
  StripMap strip;
  FeatureRecord record;
  Schedule schedule;
};

// Runs `cg` in topological order on one worker starting at t = 0.
SingleRun execute_single(const CompiledGraph& cg, const PayloadSet& inputs, const Clock& clock,
                         std::uint64_t seed);

// Padding directive helpers shared by the executor and the remodeler.
// Node params carry a fraction cap and a uniform variate; the byte count is
// drawn uniformly from [1, max(1, floor(cap * logical_len))].
namespace padding {
inline constexpr const char* kInputU = "pad_in_u";
inline constexpr const char* kOutputU = "pad_out_u";
inline constexpr const char* kCap = "pad_cap";
std::size_t amount(double u, double cap, std::size_t logical_len);
}  // namespace padding

// FeatureRecord CSV, header
// label,num_in,num_out,in_bytes,out_bytes,time_ms,cpu_ms,mem_bytes
void write_feature_csv(std::ostream& out, std::span<const FeatureRecord> records);
std::vector<FeatureRecord> read_feature_csv(std::istream& in);

// Schedule CSV, header graph,node,worker,start_ms,end_ms; canonical order.
void write_schedule_csv(std::ostream& out, const Schedule& schedule);

// Shortest round-trip decimal form; used by every CSV writer.
std::string format_double(double v);

}  // namespace shroud

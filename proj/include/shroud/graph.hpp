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
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace shroud {

enum class OpTag : std::uint8_t {
  kSort,
  kSearch,
  kHash,
  kEncrypt,
  kDecrypt,
  kCompress,
  kDecompress,
  kDownsample,
  kNormalize,
  kSplit,
  kTrain,
  kEvaluate,
  kFake,
  kCustom,
};

// Operation kind of a node. Custom kinds carry a user-supplied name.
class OpKind {
 public:
  OpKind(OpTag tag = OpTag::kSort) : tag_(tag) {}  // NOLINT

  static OpKind custom(std::string name);
  // Accepts the names produced by name(): "Sort", ..., "custom:<name>".
  static OpKind parse(std::string_view text);

  OpTag tag() const { return tag_; }
  const std::string& custom_name() const { return custom_name_; }
  bool is_fake() const { return tag_ == OpTag::kFake; }
  std::string name() const;

  friend bool operator==(const OpKind&, const OpKind&) = default;

 private:
  OpTag tag_;
  std::string custom_name_;
};

using NodeId = std::uint32_t;
using Params = std::map<std::string, double>;

struct NodeSpec {
  NodeId id = 0;
  OpKind kind;
  Params params;
  std::uint32_t declared_inputs = 1;
  std::uint32_t declared_outputs = 1;

  double param(const std::string& key, double fallback) const;
  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

// `port` is the consumer's input port. The producer's output port is implied
// by edge order (see CompiledGraph::out_port).
struct Edge {
  NodeId producer = 0;
  NodeId consumer = 0;
  std::uint32_t port = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class DelayClass : std::uint8_t { kSensitive, kTolerant };

std::string_view delay_class_name(DelayClass d);
DelayClass parse_delay_class(std::string_view text);

class GraphRewriter;
class CompiledGraph;
class ComputationGraph;
CompiledGraph compile(ComputationGraph& g);

class ComputationGraph {
 public:
  // Empty, uncompiled graph. Throws invalid-argument on an empty label.
  static ComputationGraph create(std::string class_label, DelayClass delay_class);

  // Reassembles a graph from raw parts (deserialization, tests). Endpoints
  // and self-edges are validated here; cycles are only caught by compile().
  static ComputationGraph from_parts(std::string class_label, DelayClass delay_class,
                                     std::vector<NodeSpec> nodes, std::vector<Edge> edges);

  // Appends a node fed by `deps` (ports in dep order). Empty deps make a
  // source node that reads one external input payload.
  NodeId connect_nodes(const OpKind& kind, std::span<const NodeId> deps, Params params = {});
  NodeId connect_nodes(const OpKind& kind, std::initializer_list<NodeId> deps,
                       Params params = {}) {
    return connect_nodes(kind, std::span<const NodeId>(deps.begin(), deps.size()),
                         std::move(params));
  }

  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& class_label() const { return class_label_; }
  DelayClass delay_class() const { return delay_class_; }
  bool compiled() const { return compiled_; }
  std::size_t size() const { return nodes_.size(); }

  friend bool operator==(const ComputationGraph&, const ComputationGraph&) = default;

 private:
  friend class GraphRewriter;
  friend class CompiledGraph;
  friend CompiledGraph compile(ComputationGraph& g);

  ComputationGraph(std::string class_label, DelayClass delay_class);
  void append_edges(NodeId consumer, std::span<const NodeId> deps);

  std::string class_label_;
  DelayClass delay_class_ = DelayClass::kTolerant;
  std::vector<NodeSpec> nodes_;
  std::vector<Edge> edges_;
  bool compiled_ = false;
};

// Validated, immutable DAG plus the adjacency data executors need.
class CompiledGraph {
 public:
  struct InEdge {
    NodeId producer;
    std::uint32_t out_port;
  };

  const ComputationGraph& graph() const { return graph_; }
  const NodeSpec& node(NodeId id) const { return graph_.nodes_[id]; }
  std::size_t size() const { return graph_.nodes_.size(); }

  const std::vector<NodeId>& topo_order() const { return topo_order_; }
  const std::vector<std::uint32_t>& in_degree() const { return in_degree_; }
  const std::vector<NodeId>& successors(NodeId id) const { return successors_[id]; }
  // Inputs of `id` ordered by consumer port.
  const std::vector<InEdge>& inputs_of(NodeId id) const { return inputs_[id]; }

  // Nodes without incoming edges, ascending id. Each reads one external input.
  const std::vector<NodeId>& sources() const { return sources_; }
  // Non-fake nodes with no non-fake consumer, ascending id. Their outputs are
  // the graph's outputs.
  const std::vector<NodeId>& sinks() const { return sinks_; }

  std::size_t real_node_count() const;
  std::size_t fake_node_count() const { return size() - real_node_count(); }

 private:
  friend CompiledGraph compile(ComputationGraph& g);
  explicit CompiledGraph(ComputationGraph g) : graph_(std::move(g)) {}

  ComputationGraph graph_;
  std::vector<NodeId> topo_order_;
  std::vector<std::uint32_t> in_degree_;
  std::vector<std::vector<NodeId>> successors_;
  std::vector<std::vector<InEdge>> inputs_;
  std::vector<NodeId> sources_;
  std::vector<NodeId> sinks_;
};

// Kahn's algorithm, smallest ready id first. Marks `g` compiled; the
// returned graph owns a copy. Throws cycle-error naming a node on a cycle.
CompiledGraph compile(ComputationGraph& g);
CompiledGraph compile(ComputationGraph&& g);

// Not-done nodes whose predecessors are all done, ascending id.
std::vector<NodeId> ready_frontier(const CompiledGraph& cg, const std::set<NodeId>& done);

// JSON with sorted keys; dump(to_json(g)) round-trips byte for byte.
nlohmann::json to_json(const ComputationGraph& g);
ComputationGraph graph_from_json(const nlohmann::json& j);

}  // namespace shroud

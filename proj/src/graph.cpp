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

#include "shroud/graph.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <queue>
#include <utility>

#include "shroud/error.hpp"

namespace shroud {

namespace {

constexpr std::array<std::pair<OpTag, std::string_view>, 13> kTagNames = {{
    {OpTag::kSort, "Sort"},
    {OpTag::kSearch, "Search"},
    {OpTag::kHash, "Hash"},
    {OpTag::kEncrypt, "Encrypt"},
    {OpTag::kDecrypt, "Decrypt"},
    {OpTag::kCompress, "Compress"},
    {OpTag::kDecompress, "Decompress"},
    {OpTag::kDownsample, "Downsample"},
    {OpTag::kNormalize, "Normalize"},
    {OpTag::kSplit, "Split"},
    {OpTag::kTrain, "Train"},
    {OpTag::kEvaluate, "Evaluate"},
    {OpTag::kFake, "Fake"},
}};

constexpr std::string_view kCustomPrefix = "custom:";

std::uint32_t outputs_for(const OpKind& kind, const Params& params) {
  if (kind.tag() != OpTag::kSplit) return 1;
  auto it = params.find("parts");
  const double parts = it == params.end() ? 2.0 : it->second;
  if (parts < 1.0 || parts > 1024.0) {
    throw Error(ErrorCode::kInvalidArgument, "Split needs 1 <= parts <= 1024");
  }
  return static_cast<std::uint32_t>(parts);
}

}  // namespace

OpKind OpKind::custom(std::string name) {
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "custom op name is empty");
  OpKind k(OpTag::kCustom);
  k.custom_name_ = std::move(name);
  return k;
}

OpKind OpKind::parse(std::string_view text) {
  for (const auto& [tag, name] : kTagNames) {
    if (name == text) return OpKind(tag);
  }
  if (text.starts_with(kCustomPrefix)) {
    return custom(std::string(text.substr(kCustomPrefix.size())));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown op kind '" + std::string(text) + "'");
}

std::string OpKind::name() const {
  if (tag_ == OpTag::kCustom) return std::string(kCustomPrefix) + custom_name_;
  for (const auto& [tag, name] : kTagNames) {
    if (tag == tag_) return std::string(name);
  }
  return "?";
}

double NodeSpec::param(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string_view delay_class_name(DelayClass d) {
  return d == DelayClass::kSensitive ? "sensitive" : "tolerant";
}

DelayClass parse_delay_class(std::string_view text) {
  if (text == "sensitive") return DelayClass::kSensitive;
  if (text == "tolerant") return DelayClass::kTolerant;
  throw Error(ErrorCode::kInvalidArgument, "delay_class must be sensitive|tolerant");
}

ComputationGraph::ComputationGraph(std::string class_label, DelayClass delay_class)
    : class_label_(std::move(class_label)), delay_class_(delay_class) {}

ComputationGraph ComputationGraph::create(std::string class_label, DelayClass delay_class) {
  if (class_label.empty()) throw Error(ErrorCode::kInvalidArgument, "class_label is empty");
  return ComputationGraph(std::move(class_label), delay_class);
}

ComputationGraph ComputationGraph::from_parts(std::string class_label, DelayClass delay_class,
                                              std::vector<NodeSpec> nodes,
                                              std::vector<Edge> edges) {
  ComputationGraph g = create(std::move(class_label), delay_class);
  std::set<std::string> custom_names;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const NodeSpec& n = nodes[i];
    if (n.id != i) throw Error(ErrorCode::kInvalidArgument, "node ids must be dense and ordered");
    if (n.declared_inputs < 1 || n.declared_outputs < 1) {
      throw Error(ErrorCode::kInvalidArgument, "node " + std::to_string(i) + " has zero ports");
    }
    if (n.kind.tag() == OpTag::kCustom && !custom_names.insert(n.kind.custom_name()).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate custom name " + n.kind.custom_name());
    }
  }
  for (const Edge& e : edges) {
    if (e.producer >= nodes.size() || e.consumer >= nodes.size()) {
      throw Error(ErrorCode::kInvalidArgument, "edge references a missing node");
    }
    if (e.producer == e.consumer) {
      throw Error(ErrorCode::kInvalidArgument,
                  "self-edge on node " + std::to_string(e.producer));
    }
  }
  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  return g;
}

NodeId ComputationGraph::connect_nodes(const OpKind& kind, std::span<const NodeId> deps,
                                       Params params) {
  if (compiled_) throw Error(ErrorCode::kState, "graph is compiled and immutable");
  if (kind.is_fake()) {
    throw Error(ErrorCode::kInvalidArgument, "Fake nodes are reserved for the remodeler");
  }
  if (kind.tag() == OpTag::kCustom) {
    if (kind.custom_name().empty()) {
      throw Error(ErrorCode::kInvalidArgument, "custom op name is empty");
    }
    for (const NodeSpec& n : nodes_) {
      if (n.kind == kind) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate custom name " + kind.custom_name());
      }
    }
  }
  for (NodeId d : deps) {
    if (d >= nodes_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "unknown dependency id " + std::to_string(d));
    }
  }
  NodeSpec spec;
  spec.id = static_cast<NodeId>(nodes_.size());
  spec.kind = kind;
  spec.declared_outputs = outputs_for(kind, params);
  spec.declared_inputs = deps.empty() ? 1 : static_cast<std::uint32_t>(deps.size());
  spec.params = std::move(params);
  nodes_.push_back(std::move(spec));
  append_edges(nodes_.back().id, deps);
  return nodes_.back().id;
}

void ComputationGraph::append_edges(NodeId consumer, std::span<const NodeId> deps) {
  for (std::size_t port = 0; port < deps.size(); ++port) {
    edges_.push_back(Edge{deps[port], consumer, static_cast<std::uint32_t>(port)});
  }
}

std::size_t CompiledGraph::real_node_count() const {
  return static_cast<std::size_t>(
      std::count_if(graph_.nodes_.begin(), graph_.nodes_.end(),
                    [](const NodeSpec& n) { return !n.kind.is_fake(); }));
}

CompiledGraph compile(ComputationGraph& g) {
  const std::size_t n = g.nodes_.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "cannot compile an empty graph");

  CompiledGraph cg(g);
  cg.graph_.compiled_ = true;
  cg.in_degree_.assign(n, 0);
  cg.successors_.assign(n, {});
  cg.inputs_.assign(n, {});

  std::vector<std::uint32_t> out_used(n, 0);
  std::vector<std::vector<std::pair<std::uint32_t, CompiledGraph::InEdge>>> by_port(n);
  for (const Edge& e : g.edges_) {
    const NodeSpec& prod = g.nodes_[e.producer];
    const std::uint32_t out_port = out_used[e.producer]++ % prod.declared_outputs;
    cg.in_degree_[e.consumer]++;
    cg.successors_[e.producer].push_back(e.consumer);
    by_port[e.consumer].push_back({e.port, {e.producer, out_port}});
  }
  for (NodeId v = 0; v < n; ++v) {
    auto& ports = by_port[v];
    std::sort(ports.begin(), ports.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (!ports.empty()) {
      if (ports.size() != g.nodes_[v].declared_inputs) {
        throw Error(ErrorCode::kInvalidArgument,
                    "node " + std::to_string(v) + " wired to " + std::to_string(ports.size()) +
                        " inputs but declares " + std::to_string(g.nodes_[v].declared_inputs));
      }
      for (std::uint32_t p = 0; p < ports.size(); ++p) {
        if (ports[p].first != p) {
          throw Error(ErrorCode::kInvalidArgument,
                      "node " + std::to_string(v) + " has non-contiguous input ports");
        }
        cg.inputs_[v].push_back(ports[p].second);
      }
    } else {
      cg.sources_.push_back(v);
    }
    std::sort(cg.successors_[v].begin(), cg.successors_[v].end());
  }

  std::vector<std::uint32_t> remaining = cg.in_degree_;
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId v = 0; v < n; ++v) {
    if (remaining[v] == 0) ready.push(v);
  }
  cg.topo_order_.reserve(n);
  while (!ready.empty()) {
    const NodeId v = ready.top();
    ready.pop();
    cg.topo_order_.push_back(v);
    for (NodeId s : cg.successors_[v]) {
      if (--remaining[s] == 0) ready.push(s);
    }
  }
  if (cg.topo_order_.size() != n) {
    // Every leftover node has a leftover predecessor; walking predecessors
    // must revisit a node, and that node lies on a cycle.
    std::vector<std::vector<NodeId>> preds(n);
    for (const Edge& e : g.edges_) preds[e.consumer].push_back(e.producer);
    NodeId v = 0;
    while (remaining[v] == 0) ++v;
    std::vector<bool> seen(n, false);
    while (!seen[v]) {
      seen[v] = true;
      for (NodeId p : preds[v]) {
        if (remaining[p] != 0) {
          v = p;
          break;
        }
      }
    }
    throw Error(ErrorCode::kCycle, "cycle through node " + std::to_string(v));
  }

  for (NodeId v = 0; v < n; ++v) {
    if (g.nodes_[v].kind.is_fake()) continue;
    const auto& succ = cg.successors_[v];
    const bool feeds_real = std::any_of(succ.begin(), succ.end(), [&](NodeId s) {
      return !g.nodes_[s].kind.is_fake();
    });
    if (!feeds_real) cg.sinks_.push_back(v);
  }

  g.compiled_ = true;
  return cg;
}

CompiledGraph compile(ComputationGraph&& g) {
  ComputationGraph local = std::move(g);
  return compile(local);
}

std::vector<NodeId> ready_frontier(const CompiledGraph& cg, const std::set<NodeId>& done) {
  std::vector<std::uint32_t> pending = cg.in_degree();
  for (NodeId d : done) {
    if (d >= cg.size()) throw Error(ErrorCode::kInvalidArgument, "done set has unknown node");
    for (NodeId s : cg.successors(d)) --pending[s];
  }
  std::vector<NodeId> out;
  for (NodeId v = 0; v < cg.size(); ++v) {
    if (pending[v] == 0 && !done.contains(v)) out.push_back(v);
  }
  return out;
}

nlohmann::json to_json(const ComputationGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const NodeSpec& n : g.nodes()) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : n.params) params[k] = v;
    nodes.push_back({{"id", n.id},
                     {"kind", n.kind.name()},
                     {"params", params},
                     {"inputs", n.declared_inputs},
                     {"outputs", n.declared_outputs}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.producer, e.consumer, e.port});
  return {{"class_label", g.class_label()},
          {"delay_class", delay_class_name(g.delay_class())},
          {"nodes", nodes},
          {"edges", edges}};
}

ComputationGraph graph_from_json(const nlohmann::json& j) {
  try {
    std::vector<NodeSpec> nodes;
    for (const auto& jn : j.at("nodes")) {
      NodeSpec n;
      n.id = jn.at("id").get<NodeId>();
      n.kind = OpKind::parse(jn.at("kind").get<std::string>());
      for (const auto& [k, v] : jn.at("params").items()) n.params[k] = v.get<double>();
      n.declared_inputs = jn.at("inputs").get<std::uint32_t>();
      n.declared_outputs = jn.at("outputs").get<std::uint32_t>();
      nodes.push_back(std::move(n));
    }
    std::vector<Edge> edges;
    for (const auto& je : j.at("edges")) {
      if (!je.is_array() || je.size() != 3) {
        throw Error(ErrorCode::kFormat, "edge must be [producer, consumer, port]");
      }
      edges.push_back(Edge{je[0].get<NodeId>(), je[1].get<NodeId>(), je[2].get<std::uint32_t>()});
    }
    return ComputationGraph::from_parts(j.at("class_label").get<std::string>(),
                                        parse_delay_class(j.at("delay_class").get<std::string>()),
                                        std::move(nodes), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("graph json: ") + e.what());
  }
}

}  // namespace shroud

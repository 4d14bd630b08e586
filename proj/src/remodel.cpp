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

#include "shroud/remodel.hpp"

#include <cmath>

#include "shroud/error.hpp"

namespace shroud {

// The only code allowed to emit Fake nodes or edit a compiled graph's copy.
class GraphRewriter {
 public:
  static ComputationGraph thaw(const ComputationGraph& g) {
    ComputationGraph copy = g;
    copy.compiled_ = false;
    return copy;
  }

  static NodeId attach_fake(ComputationGraph& g, NodeId host, double cost_ms) {
    NodeSpec spec;
    spec.id = static_cast<NodeId>(g.nodes_.size());
    spec.kind = OpKind(OpTag::kFake);
    spec.params["cost_ms"] = cost_ms;
    g.nodes_.push_back(std::move(spec));
    const NodeId deps[] = {host};
    g.append_edges(g.nodes_.back().id, deps);
    return g.nodes_.back().id;
  }

  static void set_param(ComputationGraph& g, NodeId node, const std::string& key, double value) {
    g.nodes_.at(node).params[key] = value;
  }
};

namespace {

constexpr double kPadFractionPerLevel = 0.2;

void check_level(int level) {
  if (level < kMinLevel || level > kMaxLevel) {
    throw Error(ErrorCode::kInvalidArgument,
                "anonymization level " + std::to_string(level) + " outside [1, 5]");
  }
}

}  // namespace

FeatureMask FeatureMask::parse(std::string_view text) {
  if (text == "all") return all();
  if (text == "none") return none();
  if (text == "in") return {true, false, false};
  if (text == "out") return {false, true, false};
  if (text == "both") return {true, true, false};
  if (text == "time") return {false, false, true};
  FeatureMask m;
  std::size_t at = 0;
  while (at <= text.size()) {
    const auto end = std::min(text.find('+', at), text.size());
    const auto flag = text.substr(at, end - at);
    if (flag == "pad_inputs") {
      m.pad_inputs = true;
    } else if (flag == "pad_outputs") {
      m.pad_outputs = true;
    } else if (flag == "anonymize_time") {
      m.anonymize_time = true;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown feature mask '" + std::string(text) + "'");
    }
    at = end + 1;
  }
  return m;
}

std::string FeatureMask::name() const {
  if (*this == all()) return "all";
  if (*this == none()) return "none";
  if (*this == FeatureMask{true, false, false}) return "in";
  if (*this == FeatureMask{false, true, false}) return "out";
  if (*this == FeatureMask{true, true, false}) return "both";
  if (*this == FeatureMask{false, false, true}) return "time";
  std::string out;
  auto add = [&](bool on, const char* flag) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += flag;
  };
  add(pad_inputs, "pad_inputs");
  add(pad_outputs, "pad_outputs");
  add(anonymize_time, "anonymize_time");
  return out;
}

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::kRemodeling: return "remodeling";
    case Mode::kMixing: return "mixing";
    case Mode::kHybrid: return "hybrid";
  }
  return "?";
}

void AnonymizationPlan::validate() const {
  check_level(level);
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (weight && !(*weight > 0.0)) throw Error(ErrorCode::kInvalidArgument, "weight must be > 0");
  if (parallel && workers < 2) {
    throw Error(ErrorCode::kInvalidArgument, "parallel mixing needs at least 2 workers");
  }
}

nlohmann::json AnonymizationPlan::to_json() const {
  nlohmann::json j = {{"mode", mode_name(mode)},
                      {"level", level},
                      {"mask", mask.name()},
                      {"batch_size", batch_size},
                      {"parallel", parallel},
                      {"workers", workers},
                      {"seed", seed}};
  if (weight) j["weight"] = *weight;
  return j;
}

AnonymizationPlan AnonymizationPlan::from_json(const nlohmann::json& j) {
  AnonymizationPlan p;
  try {
    const std::string mode = j.value("mode", std::string("remodeling"));
    if (mode == "remodeling") {
      p.mode = Mode::kRemodeling;
    } else if (mode == "mixing") {
      p.mode = Mode::kMixing;
    } else if (mode == "hybrid") {
      p.mode = Mode::kHybrid;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + mode + "'");
    }
    p.level = j.value("level", kMinLevel);
    p.mask = FeatureMask::parse(j.value("mask", std::string("all")));
    p.batch_size = j.value("batch_size", std::size_t{1});
    p.parallel = j.value("parallel", false);
    p.workers = j.value("workers", kDefaultWorkers);
    p.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("weight")) p.weight = j.at("weight").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("plan: ") + e.what());
  }
  p.validate();
  return p;
}

std::size_t fake_node_budget(int level, std::size_t real_nodes) {
  check_level(level);
  return (static_cast<std::size_t>(level) * real_nodes + 2) / 3;
}

double mean_node_cost_ms(const CompiledGraph& cg, const CostModel& costs) {
  double total = 0.0;
  std::size_t count = 0;
  for (const NodeSpec& n : cg.graph().nodes()) {
    if (n.kind.is_fake()) continue;
    total += simulated_cost(n, kReferenceInputBytes, costs).time_ms;
    ++count;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

AnonymizedGraph anonymize_remodel(const CompiledGraph& cg, int level, const FeatureMask& mask,
                                  std::uint64_t seed, const CostModel& costs) {
  check_level(level);
  Rng rng(seed);
  ComputationGraph g = GraphRewriter::thaw(cg.graph());

  std::vector<NodeId> real;
  for (const NodeSpec& n : cg.graph().nodes()) {
    if (!n.kind.is_fake()) real.push_back(n.id);
  }

  if (mask.anonymize_time && !real.empty()) {
    const double cap = level * mean_node_cost_ms(cg, costs) / 5.0;
    const std::size_t budget = fake_node_budget(level, real.size());
    for (std::size_t i = 0; i < budget; ++i) {
      const NodeId host = real[rng.uniform_int(0, real.size() - 1)];
      // 1 - U[0,1) lies in (0, 1], so the cost is in (0, cap].
      GraphRewriter::attach_fake(g, host, cap * (1.0 - rng.uniform()));
    }
  }

  const double pad_cap = kPadFractionPerLevel * level;
  std::vector<OutputPadding> strip_map;
  if (mask.pad_inputs) {
    for (NodeId s : cg.sources()) {
      GraphRewriter::set_param(g, s, padding::kInputU, rng.uniform());
      GraphRewriter::set_param(g, s, padding::kCap, pad_cap);
    }
  }
  if (mask.pad_outputs) {
    for (NodeId s : cg.sinks()) {
      const double u = rng.uniform();
      GraphRewriter::set_param(g, s, padding::kOutputU, u);
      GraphRewriter::set_param(g, s, padding::kCap, pad_cap);
      strip_map.push_back({s, u, pad_cap});
    }
  }

  return AnonymizedGraph{compile(g), Provenance{cg.graph().class_label(), level, mask, seed},
                         std::move(strip_map)};
}

AnonymizedPool::AnonymizedPool(std::vector<AnonymizedGraph> variants)
    : variants_(std::move(variants)) {
  if (variants_.empty()) throw Error(ErrorCode::kInvalidArgument, "pool needs at least one variant");
}

const AnonymizedGraph& AnonymizedPool::select(Rng& rng) const {
  return variants_[rng.uniform_int(0, variants_.size() - 1)];
}

AnonymizedPool preanonymize_pool(const CompiledGraph& cg, const AnonymizationPlan& plan,
                                 std::size_t n, std::uint64_t seed, const CostModel& costs) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "pool size must be >= 1");
  std::vector<AnonymizedGraph> variants;
  variants.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    variants.push_back(anonymize_remodel(cg, plan.level, plan.mask, derive_seed(seed, i), costs));
  }
  return AnonymizedPool(std::move(variants));
}

nlohmann::json to_json(const AnonymizedGraph& ag) {
  nlohmann::json j = to_json(ag.graph.graph());
  j["provenance"] = {{"class_label", ag.provenance.class_label},
                     {"level", ag.provenance.level},
                     {"mask", ag.provenance.mask.name()},
                     {"seed", ag.provenance.seed}};
  nlohmann::json strip = nlohmann::json::array();
  for (const auto& s : ag.strip_map) strip.push_back({{"sink", s.sink}, {"u", s.u}, {"cap", s.cap}});
  j["strip_map"] = strip;
  return j;
}

AnonymizedGraph anonymized_from_json(const nlohmann::json& j) {
  try {
    ComputationGraph g = graph_from_json(j);
    const auto& p = j.at("provenance");
    Provenance prov{p.at("class_label").get<std::string>(), p.at("level").get<int>(),
                    FeatureMask::parse(p.at("mask").get<std::string>()),
                    p.at("seed").get<std::uint64_t>()};
    std::vector<OutputPadding> strip;
    for (const auto& s : j.at("strip_map")) {
      strip.push_back({s.at("sink").get<NodeId>(), s.at("u").get<double>(), s.at("cap").get<double>()});
    }
    return AnonymizedGraph{compile(g), std::move(prov), std::move(strip)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("anonymized graph json: ") + e.what());
  }
}

}  // namespace shroud

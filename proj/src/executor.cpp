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

#include "shroud/executor.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "shroud/error.hpp"
#include "shroud/ops.hpp"
#include "shroud/rng.hpp"

namespace shroud {

namespace {

constexpr double kTimeEps = 1e-9;

constexpr std::array<OpTag, 14> kAllTags = {
    OpTag::kSort,     OpTag::kSearch,     OpTag::kHash,       OpTag::kEncrypt,
    OpTag::kDecrypt,  OpTag::kCompress,   OpTag::kDecompress, OpTag::kDownsample,
    OpTag::kNormalize, OpTag::kSplit,     OpTag::kTrain,      OpTag::kEvaluate,
    OpTag::kFake,     OpTag::kCustom};

std::string tag_key(OpTag tag) {
  return tag == OpTag::kCustom ? "Custom" : OpKind(tag).name();
}

void check_cost(const KindCost& c, const std::string& kind) {
  if (c.base_ms < 0 || c.ms_per_byte < 0 || c.mem_base < 0 || c.mem_per_byte < 0) {
    throw Error(ErrorCode::kConfig, "negative cost coefficient for " + kind);
  }
  if (!(c.cpu_fraction > 0.0 && c.cpu_fraction <= 1.0)) {
    throw Error(ErrorCode::kConfig, "cpu_fraction of " + kind + " must be in (0, 1]");
  }
}

}  // namespace

CostModel CostModel::uniform(const KindCost& cost) {
  check_cost(cost, "uniform");
  CostModel m;
  m.by_tag_.fill(cost);
  return m;
}

void CostModel::set(OpTag tag, const KindCost& cost) {
  check_cost(cost, tag_key(tag));
  by_tag_[static_cast<std::size_t>(tag)] = cost;
}

nlohmann::json CostModel::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (OpTag tag : kAllTags) {
    const KindCost& c = by_tag_[static_cast<std::size_t>(tag)];
    j[tag_key(tag)] = {{"base_ms", c.base_ms},
                       {"ms_per_byte", c.ms_per_byte},
                       {"cpu_fraction", c.cpu_fraction},
                       {"mem_base", c.mem_base},
                       {"mem_per_byte", c.mem_per_byte}};
  }
  return j;
}

CostModel CostModel::from_json(const nlohmann::json& j) {
  CostModel m;
  try {
    for (const auto& [key, value] : j.items()) {
      const OpTag tag = key == "Custom" ? OpTag::kCustom : OpKind::parse(key).tag();
      KindCost c;
      c.base_ms = value.at("base_ms").get<double>();
      c.ms_per_byte = value.at("ms_per_byte").get<double>();
      c.cpu_fraction = value.at("cpu_fraction").get<double>();
      c.mem_base = value.at("mem_base").get<double>();
      c.mem_per_byte = value.at("mem_per_byte").get<double>();
      m.set(tag, c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("cost model: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return m;
}

NodeCost simulated_cost(const NodeSpec& node, std::size_t input_bytes, const CostModel& costs) {
  const KindCost& c = costs.of(node.kind);
  const double bytes = static_cast<double>(input_bytes);
  NodeCost out;
  out.time_ms = node.kind.is_fake() ? node.param("cost_ms", 0.0)
                                    : c.base_ms + c.ms_per_byte * bytes;
  out.busy_ms = out.time_ms * c.cpu_fraction;
  out.mem_bytes = c.mem_base + c.mem_per_byte * bytes;
  return out;
}

void Schedule::canonicalize() {
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.start_ms != b.start_ms) return a.start_ms < b.start_ms;
    return a.worker < b.worker;
  });
}

ScheduleCheck validate_schedule(const Schedule& schedule, std::span<const CompiledGraph> batch) {
  auto fail = [](std::string why) { return ScheduleCheck{false, std::move(why)}; };
  std::vector<std::vector<std::ptrdiff_t>> where(batch.size());
  std::size_t total = 0;
  for (std::size_t g = 0; g < batch.size(); ++g) {
    where[g].assign(batch[g].size(), -1);
    total += batch[g].size();
  }
  const auto& es = schedule.entries;
  for (std::size_t i = 0; i < es.size(); ++i) {
    const ScheduleEntry& e = es[i];
    if (e.graph >= batch.size() || e.node >= batch[e.graph].size()) {
      return fail("entry " + std::to_string(i) + " names an unknown node");
    }
    if (e.end_ms + kTimeEps < e.start_ms) return fail("entry " + std::to_string(i) + " ends before it starts");
    auto& slot = where[e.graph][e.node];
    if (slot >= 0) {
      return fail("graph " + std::to_string(e.graph) + " node " + std::to_string(e.node) +
                  " executed twice");
    }
    slot = static_cast<std::ptrdiff_t>(i);
  }
  if (es.size() != total) return fail("schedule misses nodes");

  for (std::size_t g = 0; g < batch.size(); ++g) {
    for (const Edge& edge : batch[g].graph().edges()) {
      const auto& u = es[where[g][edge.producer]];
      const auto& v = es[where[g][edge.consumer]];
      if (where[g][edge.producer] > where[g][edge.consumer] || v.start_ms + kTimeEps < u.end_ms) {
        return fail("graph " + std::to_string(g) + " node " + std::to_string(edge.consumer) +
                    " runs before its producer " + std::to_string(edge.producer));
      }
    }
  }

  std::map<std::uint32_t, std::vector<std::pair<double, double>>> by_worker;
  for (const auto& e : es) by_worker[e.worker].emplace_back(e.start_ms, e.end_ms);
  for (auto& [worker, spans] : by_worker) {
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first + kTimeEps < spans[i - 1].second) {
        return fail("worker " + std::to_string(worker) + " runs two nodes at once");
      }
    }
  }
  return {};
}

std::vector<FeatureRecord> collect_features(const Schedule& schedule,
                                            std::span<const CompiledGraph> batch,
                                            std::span<const GraphAccounting> io) {
  if (io.size() != batch.size()) {
    throw Error(ErrorCode::kInvalidArgument, "accounting does not match batch");
  }
  std::vector<double> first(batch.size(), INFINITY);
  std::vector<double> last(batch.size(), -INFINITY);
  for (const auto& e : schedule.entries) {
    first[e.graph] = std::min(first[e.graph], e.start_ms);
    last[e.graph] = std::max(last[e.graph], e.end_ms);
  }
  std::vector<FeatureRecord> out;
  out.reserve(batch.size());
  for (std::size_t g = 0; g < batch.size(); ++g) {
    FeatureRecord r;
    r.class_label = batch[g].graph().class_label();
    r.num_inputs = io[g].num_inputs;
    r.num_outputs = io[g].num_outputs;
    r.total_input_bytes = io[g].input_bytes;
    r.total_output_bytes = io[g].output_bytes;
    r.completion_time_ms = last[g] >= first[g] ? last[g] - first[g] : 0.0;
    for (double b : io[g].node_busy_ms) r.cpu_busy_ms += b;
    for (double m : io[g].node_mem_bytes) r.peak_memory_bytes = std::max(r.peak_memory_bytes, m);
    out.push_back(std::move(r));
  }
  return out;
}

Overheads normalized_overheads(const FeatureRecord& anon, const FeatureRecord& base) {
  if (base.completion_time_ms <= 0 || base.cpu_busy_ms <= 0 || base.peak_memory_bytes <= 0) {
    throw Error(ErrorCode::kDivision, "baseline record has a zero field");
  }
  return {anon.completion_time_ms / base.completion_time_ms, anon.cpu_busy_ms / base.cpu_busy_ms,
          anon.peak_memory_bytes / base.peak_memory_bytes};
}

std::size_t padding::amount(double u, double cap, std::size_t logical_len) {
  const auto limit = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(cap * static_cast<double>(logical_len))));
  const auto pick = static_cast<std::size_t>(std::floor(u * static_cast<double>(limit)));
  return 1 + std::min(pick, limit - 1);
}

GraphRun::GraphRun(const CompiledGraph& cg, const PayloadSet& inputs, std::uint64_t seed)
    : cg_(&cg), seed_(seed), outputs_(cg.size()), busy_ms_(cg.size(), 0.0),
      mem_bytes_(cg.size(), 0.0) {
  const auto& sources = cg.sources();
  if (inputs.size() != sources.size()) {
    throw Error(ErrorCode::kInput, "graph '" + cg.graph().class_label() + "' has " +
                                       std::to_string(sources.size()) + " sources, got " +
                                       std::to_string(inputs.size()) + " inputs");
  }
  external_ = inputs;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const NodeSpec& node = cg.node(sources[i]);
    auto u = node.params.find(padding::kInputU);
    if (u == node.params.end()) continue;
    external_[i].pad(padding::amount(u->second, node.param(padding::kCap, 0.0),
                                     external_[i].logical_len()));
  }
}

std::size_t GraphRun::input_bytes(NodeId node) const {
  const auto& ins = cg_->inputs_of(node);
  if (ins.empty()) {
    const auto& src = cg_->sources();
    const auto idx = std::lower_bound(src.begin(), src.end(), node) - src.begin();
    return external_[idx].physical_len();
  }
  std::size_t total = 0;
  for (const auto& in : ins) total += outputs_[in.producer][in.out_port].physical_len();
  return total;
}

NodeCost GraphRun::cost(NodeId node, const CostModel& costs) const {
  return simulated_cost(cg_->node(node), input_bytes(node), costs);
}

PayloadSet GraphRun::run(NodeId node) const {
  const auto& ins = cg_->inputs_of(node);
  std::vector<Payload> args;
  if (ins.empty()) {
    const auto& src = cg_->sources();
    args.push_back(external_[std::lower_bound(src.begin(), src.end(), node) - src.begin()]);
  } else {
    args.reserve(ins.size());
    for (const auto& in : ins) args.push_back(outputs_[in.producer].at(in.out_port));
  }
  return run_node(cg_->node(node), args, derive_seed(seed_, node));
}

void GraphRun::commit(NodeId node, PayloadSet outputs, double busy_ms, double mem_bytes) {
  if (outputs.size() != cg_->node(node).declared_outputs) {
    throw Error(ErrorCode::kArity, "node " + std::to_string(node) + " produced " +
                                       std::to_string(outputs.size()) + " outputs");
  }
  outputs_[node] = std::move(outputs);
  busy_ms_[node] = busy_ms;
  mem_bytes_[node] = mem_bytes;
}

GraphRun::Outcome GraphRun::finish() const {
  Outcome out;
  bool padded = false;
  for (NodeId sink : cg_->sinks()) {
    const NodeSpec& node = cg_->node(sink);
    auto u = node.params.find(padding::kOutputU);
    for (const Payload& p : outputs_[sink]) {
      Payload copy = p;
      std::size_t extra = 0;
      if (u != node.params.end()) {
        extra = padding::amount(u->second, node.param(padding::kCap, 0.0), copy.logical_len());
        copy.pad(extra);
        padded = true;
      }
      out.strip.push_back(extra);
      out.outputs.push_back(std::move(copy));
    }
  }
  if (!padded) out.strip.clear();

  auto& acc = out.accounting;
  acc.num_inputs = external_.size();
  acc.num_outputs = out.outputs.size();
  for (const auto& p : external_) acc.input_bytes += p.physical_len();
  for (const auto& p : out.outputs) acc.output_bytes += p.physical_len();
  acc.node_busy_ms = busy_ms_;
  acc.node_mem_bytes = mem_bytes_;
  return out;
}

SingleRun execute_single(const CompiledGraph& cg, const PayloadSet& inputs, const Clock& clock,
                         std::uint64_t seed) {
  GraphRun run(cg, inputs, seed);
  SingleRun result;
  const auto t0 = std::chrono::steady_clock::now();
  auto since_t0 = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };
  double now = 0.0;
  for (NodeId v : cg.topo_order()) {
    const NodeCost cost = run.cost(v, clock.costs);
    if (clock.mode == ClockMode::kSimulated) {
      run.commit(v, run.run(v), cost.busy_ms, cost.mem_bytes);
      result.schedule.entries.push_back({0, v, now, now + cost.time_ms, 0});
      now += cost.time_ms;
    } else {
      const double start = since_t0();
      PayloadSet outs = run.run(v);
      const double end = since_t0();
      run.commit(v, std::move(outs), end - start, cost.mem_bytes);
      result.schedule.entries.push_back({0, v, start, end, 0});
    }
  }
  auto outcome = run.finish();
  result.outputs = std::move(outcome.outputs);
  result.strip = std::move(outcome.strip);
  result.record = collect_features(result.schedule, std::span<const CompiledGraph>(&cg, 1),
                                   std::span<const GraphAccounting>(&outcome.accounting, 1))
                      .front();
  return result;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void write_feature_csv(std::ostream& out, std::span<const FeatureRecord> records) {
  out << "label,num_in,num_out,in_bytes,out_bytes,time_ms,cpu_ms,mem_bytes\n";
  for (const auto& r : records) {
    out << r.class_label << ',' << r.num_inputs << ',' << r.num_outputs << ','
        << r.total_input_bytes << ',' << r.total_output_bytes << ','
        << format_double(r.completion_time_ms) << ',' << format_double(r.cpu_busy_ms) << ','
        << format_double(r.peak_memory_bytes) << '\n';
  }
}

std::vector<FeatureRecord> read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "label,num_in,num_out,in_bytes,out_bytes,time_ms,cpu_ms,mem_bytes") {
    throw Error(ErrorCode::kFormat, "feature csv: bad header");
  }
  std::vector<FeatureRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) {
      throw Error(ErrorCode::kFormat, "feature csv line " + std::to_string(lineno) + ": 8 cells expected");
    }
    try {
      FeatureRecord r;
      r.class_label = cells[0];
      r.num_inputs = std::stoull(cells[1]);
      r.num_outputs = std::stoull(cells[2]);
      r.total_input_bytes = std::stoull(cells[3]);
      r.total_output_bytes = std::stoull(cells[4]);
      r.completion_time_ms = std::stod(cells[5]);
      r.cpu_busy_ms = std::stod(cells[6]);
      r.peak_memory_bytes = std::stod(cells[7]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kFormat, "feature csv line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

void write_schedule_csv(std::ostream& out, const Schedule& schedule) {
  Schedule sorted = schedule;
  sorted.canonicalize();
  out << "graph,node,worker,start_ms,end_ms\n";
  for (const auto& e : sorted.entries) {
    out << e.graph << ',' << e.node << ',' << e.worker << ',' << format_double(e.start_ms) << ','
        << format_double(e.end_ms) << '\n';
  }
}

}  // namespace shroud

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
#include <set>
#include <vector>

#include "shroud/error.hpp"
#include "shroud/graph.hpp"
#include "shroud/payload.hpp"
#include "shroud/rng.hpp"

namespace shroud::testing {

#define CHECK_THROWS_CODE(expr, expected_code)                  \
  do {                                                          \
    bool thrown_ = false;                                       \
    try {                                                       \
      (void)(expr);                                             \
    } catch (const ::shroud::Error& e) {                        \
      thrown_ = true;                                           \
      CHECK_MESSAGE(e.code() == (expected_code), e.what());     \
    }                                                           \
    CHECK_MESSAGE(thrown_, "expected shroud::Error: " #expr);   \
  } while (0)

inline Bytes random_bytes(Rng& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng.next());
  return b;
}

inline ComputationGraph chain(std::size_t n, const std::string& label = "chain",
                              OpKind kind = OpKind(OpTag::kSort)) {
  ComputationGraph g = ComputationGraph::create(label, DelayClass::kTolerant);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      g.connect_nodes(kind, {});
    } else {
      g.connect_nodes(kind, {static_cast<NodeId>(i - 1)});
    }
  }
  return g;
}

// a -> {b, c} -> d
inline ComputationGraph diamond(const std::string& label = "diamond") {
  ComputationGraph g = ComputationGraph::create(label, DelayClass::kTolerant);
  const NodeId a = g.connect_nodes(OpTag::kSort, {});
  const NodeId b = g.connect_nodes(OpTag::kEncrypt, {a}, {{"key", 3}});
  const NodeId c = g.connect_nodes(OpTag::kCompress, {a});
  g.connect_nodes(OpTag::kHash, {b, c});
  return g;
}

// Random DAG by forward-edge sampling over a random mix of real kinds.
// Kinds that can fail on arbitrary input (Decompress) are left out.
inline ComputationGraph random_dag(Rng& rng, std::size_t n, double edge_p,
                                   const std::string& label = "random") {
  static const OpTag kinds[] = {OpTag::kSort,      OpTag::kSearch,    OpTag::kHash,
                                OpTag::kEncrypt,   OpTag::kDecrypt,   OpTag::kCompress,
                                OpTag::kDownsample, OpTag::kNormalize, OpTag::kSplit,
                                OpTag::kTrain,     OpTag::kEvaluate};
  ComputationGraph g = ComputationGraph::create(label, rng.uniform() < 0.5
                                                           ? DelayClass::kSensitive
                                                           : DelayClass::kTolerant);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<NodeId> deps;
    for (std::size_t j = 0; j < i; ++j) {
      if (rng.uniform() < edge_p) deps.push_back(static_cast<NodeId>(j));
    }
    const OpTag tag = kinds[rng.uniform_int(0, std::size(kinds) - 1)];
    Params p;
    if (tag == OpTag::kSplit) p["parts"] = static_cast<double>(rng.uniform_int(1, 3));
    if (tag == OpTag::kDownsample) p["k"] = static_cast<double>(rng.uniform_int(1, 4));
    if (tag == OpTag::kEncrypt || tag == OpTag::kDecrypt) p["key"] = static_cast<double>(rng.uniform_int(0, 99));
    if (tag == OpTag::kSearch) p["needle"] = static_cast<double>(rng.uniform_int(0, 255));
    if (tag == OpTag::kTrain || tag == OpTag::kEvaluate) p["iters"] = 2;
    g.connect_nodes(tag, deps, p);
  }
  return g;
}

inline PayloadSet random_inputs(Rng& rng, const CompiledGraph& cg, std::size_t lo = 1,
                                std::size_t hi = 64) {
  PayloadSet in;
  for (std::size_t i = 0; i < cg.sources().size(); ++i) {
    in.emplace_back(random_bytes(rng, rng.uniform_int(lo, hi)));
  }
  return in;
}

}  // namespace shroud::testing

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


#include "shroud/workloads.hpp"

namespace shroud {

namespace {

constexpr std::size_t kInputMin = 512;
constexpr std::size_t kInputMax = 2048;

OpKind k(OpTag tag) { return OpKind(tag); }

// Five topologies, each in two flavours that differ in one length-preserving
// stage: a keyed cipher or an affine rescale.
std::vector<TemplateStep> digest(OpTag stage) {
  return {
      {k(OpTag::kSort), {}, {}},
      {k(stage), {0}, {{"key", 11}}},
      {k(OpTag::kCompress), {0}, {}},
      {k(OpTag::kHash), {1, 2, 0}, {}},
  };
}

std::vector<TemplateStep> fit_pair(OpTag stage) {
  return {
      {k(OpTag::kSort), {}, {}},
      {k(stage), {}, {{"key", 23}}},
      {k(OpTag::kTrain), {0, 1}, {{"iters", 16}}},
      {k(OpTag::kEvaluate), {2, 1}, {}},
  };
}

std::vector<TemplateStep> shard(OpTag stage) {
  return {
      {k(OpTag::kSort), {}, {}},
      {k(stage), {0}, {{"key", 37}}},
      {k(OpTag::kDownsample), {0}, {{"k", 2}}},
      {k(OpTag::kSplit), {1, 2}, {{"parts", 2}}},
  };
}

std::vector<TemplateStep> index_lookup(OpTag stage) {
  return {
      {k(OpTag::kCompress), {}, {}},
      {k(OpTag::kSort), {}, {}},
      {k(stage), {0, 1}, {{"key", 41}}},
      {k(OpTag::kHash), {2}, {}},
      {k(OpTag::kSearch), {1, 2}, {{"needle", 128}}},
  };
}

std::vector<TemplateStep> ensemble(OpTag stage) {
  return {
      {k(stage), {}, {{"key", 53}}},
      {k(OpTag::kCompress), {}, {}},
      {k(OpTag::kSort), {}, {}},
      {k(OpTag::kTrain), {0, 1, 2}, {{"iters", 16}}},
      {k(OpTag::kEvaluate), {3, 2}, {}},
  };
}

WorkloadClass make(std::string name, DelayClass delay, std::vector<TemplateStep> steps) {
  return {std::move(name), delay, std::move(steps), kInputMin, kInputMax};
}

}  // namespace

std::vector<WorkloadClass> default_class_suite() {
  const auto S = DelayClass::kSensitive;
  const auto T = DelayClass::kTolerant;
  return {
      make("secure_digest", S, digest(OpTag::kEncrypt)),
      make("scaled_digest", S, digest(OpTag::kNormalize)),
      make("private_fit", T, fit_pair(OpTag::kEncrypt)),
      make("normalized_fit", T, fit_pair(OpTag::kNormalize)),
      make("cipher_shard", S, shard(OpTag::kEncrypt)),
      make("scaled_shard", S, shard(OpTag::kNormalize)),
      make("sealed_index", T, index_lookup(OpTag::kEncrypt)),
      make("scaled_index", T, index_lookup(OpTag::kNormalize)),
      make("private_ensemble", T, ensemble(OpTag::kEncrypt)),
      make("normalized_ensemble", T, ensemble(OpTag::kNormalize)),
  };
}

}  // namespace shroud

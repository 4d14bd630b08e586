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

namespace shroud {

// Keep in sync with data/cost_model.json (a unit test compares the two).
// Encrypt/Decrypt and Normalize cost the same CPU per byte; Normalize spends
// part of its time off-CPU.
CostModel CostModel::defaults() {
  constexpr double kPerKiB = 1.0 / 1024.0;
  CostModel m;
  m.set(OpTag::kSort, {1.5, 0.25 * kPerKiB, 1.0, 8192, 2});
  m.set(OpTag::kSearch, {0.5, 0.125 * kPerKiB, 1.0, 4096, 1});
  m.set(OpTag::kHash, {1.0, 0.25 * kPerKiB, 1.0, 4096, 1});
  m.set(OpTag::kEncrypt, {1.0, 0.25 * kPerKiB, 1.0, 8192, 2});
  m.set(OpTag::kDecrypt, {1.0, 0.25 * kPerKiB, 1.0, 8192, 2});
  m.set(OpTag::kCompress, {2.0, 0.5 * kPerKiB, 0.75, 8192, 3});
  m.set(OpTag::kDecompress, {1.5, 0.25 * kPerKiB, 0.75, 8192, 3});
  m.set(OpTag::kDownsample, {0.5, 0.125 * kPerKiB, 0.5, 4096, 1});
  m.set(OpTag::kNormalize, {1.25, 0.3125 * kPerKiB, 0.8, 8192, 2});
  m.set(OpTag::kSplit, {0.5, 0.125 * kPerKiB, 0.5, 4096, 1});
  m.set(OpTag::kTrain, {6.0, 1.0 * kPerKiB, 1.0, 65536, 4});
  m.set(OpTag::kEvaluate, {3.0, 0.5 * kPerKiB, 1.0, 32768, 2});
  m.set(OpTag::kFake, {0.0, 0.0, 1.0, 2048, 0});
  m.set(OpTag::kCustom, {1.0, 0.0, 1.0, 4096, 1});
  return m;
}

}  // namespace shroud

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
#include <span>

#include "shroud/graph.hpp"
#include "shroud/payload.hpp"

namespace shroud {

// Executes one operation. Inputs' logical bytes are concatenated in port
// order before the kernel runs; padding is never read. Results have no
// padding. Output is a pure function of (logical bytes, params, seed).
//
//   Sort        byte-wise ascending sort
//   Search      lower-bound index of params["needle"] in the sorted bytes,
//               as an 8-byte little-endian integer
//   Hash        SHA-256 digest (32 bytes)
//   Encrypt     XOR with a splitmix64 keystream keyed by params["key"];
//   Decrypt     the same transform, so the pair is involutive
//   Compress    run-length pairs (count 1..255, byte)
//   Decompress  inverse of Compress; format-error on malformed input
//   Downsample  every params["k"]-th byte (default 2)
//   Normalize   affine remap of [min, max] onto [0, 255]
//   Split       params["parts"] contiguous chunks (default 2)
//   Train       params["iters"] passes of an online-averaging kernel, 64-byte state
//   Evaluate    params["iters"] passes of a scoring kernel, 64-byte summary
//   Fake        checksum busy-work, 8-byte dead output
//   Custom      identity
//
// Throws arity-error when inputs.size() != declared_inputs.
PayloadSet run_op(const OpKind& kind, std::span<const Payload> inputs, const Params& params,
                  std::uint64_t seed, std::uint32_t declared_inputs);

inline PayloadSet run_node(const NodeSpec& node, std::span<const Payload> inputs,
                           std::uint64_t seed) {
  return run_op(node.kind, inputs, node.params, seed, node.declared_inputs);
}

Bytes rle_encode(std::span<const std::uint8_t> data);
Bytes rle_decode(std::span<const std::uint8_t> data);

}  // namespace shroud

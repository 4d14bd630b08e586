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

#include "shroud/payload.hpp"

#include <algorithm>
#include <string>

#include "shroud/error.hpp"

namespace shroud {

Payload::Payload(Bytes data, std::size_t logical_len)
    : bytes_(std::move(data)), logical_len_(logical_len) {
  if (logical_len_ > bytes_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "logical_len exceeds buffer length");
  }
}

Payload Payload::stripped(std::size_t amount) const {
  if (amount > padding()) {
    throw Error(ErrorCode::kCorruption, "strip of " + std::to_string(amount) +
                                            " bytes exceeds padding of " +
                                            std::to_string(padding()) + " (physical " +
                                            std::to_string(physical_len()) + ")");
  }
  Payload out = *this;
  out.bytes_.resize(bytes_.size() - amount);
  // Whatever padding the map did not account for is dropped as well.
  out.bytes_.resize(logical_len_);
  return out;
}

PayloadSet strip_outputs(const PayloadSet& outputs, const StripMap& strip_map) {
  if (strip_map.empty()) return outputs;
  if (strip_map.size() != outputs.size()) {
    throw Error(ErrorCode::kCorruption, "strip map covers " + std::to_string(strip_map.size()) +
                                            " outputs, have " + std::to_string(outputs.size()));
  }
  PayloadSet out;
  out.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) out.push_back(outputs[i].stripped(strip_map[i]));
  return out;
}

bool same_logical(const PayloadSet& a, const PayloadSet& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const Payload& x, const Payload& y) {
    return std::ranges::equal(x.logical(), y.logical());
  });
}

}  // namespace shroud

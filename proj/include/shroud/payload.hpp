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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shroud {

using Bytes = std::vector<std::uint8_t>;

// A byte buffer whose first logical_len bytes are data; the rest is padding.
// Operations only ever read logical(). An observer sees physical_len().
class Payload {
 public:
  Payload() = default;
  explicit Payload(Bytes data) : bytes_(std::move(data)), logical_len_(bytes_.size()) {}
  Payload(Bytes data, std::size_t logical_len);

  std::span<const std::uint8_t> logical() const { return {bytes_.data(), logical_len_}; }
  std::span<const std::uint8_t> physical() const { return bytes_; }
  std::size_t logical_len() const { return logical_len_; }
  std::size_t physical_len() const { return bytes_.size(); }
  std::size_t padding() const { return bytes_.size() - logical_len_; }

  void pad(std::size_t extra, std::uint8_t fill = 0) { bytes_.resize(bytes_.size() + extra, fill); }

  // Drops `amount` trailing padding bytes; corruption-error if that would cut
  // into logical data.
  Payload stripped(std::size_t amount) const;

  Bytes logical_bytes() const { return {bytes_.begin(), bytes_.begin() + logical_len_}; }

  friend bool operator==(const Payload&, const Payload&) = default;

 private:
  Bytes bytes_;
  std::size_t logical_len_ = 0;
};

using PayloadSet = std::vector<Payload>;

// Per-output padding byte counts to remove. Empty means nothing to strip.
using StripMap = std::vector<std::size_t>;

PayloadSet strip_outputs(const PayloadSet& outputs, const StripMap& strip_map);

bool same_logical(const PayloadSet& a, const PayloadSet& b);

}  // namespace shroud

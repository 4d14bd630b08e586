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

#include "shroud/ops.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <string>

#include "shroud/error.hpp"
#include "shroud/rng.hpp"

namespace shroud {

namespace {

double param_or(const Params& p, const char* key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

Bytes concat_logical(std::span<const Payload> inputs) {
  std::size_t total = 0;
  for (const Payload& in : inputs) total += in.logical_len();
  Bytes data;
  data.reserve(total);
  for (const Payload& in : inputs) data.insert(data.end(), in.logical().begin(), in.logical().end());
  return data;
}

Bytes pack_doubles(std::span<const double> values) {
  Bytes out(values.size() * sizeof(double));
  std::memcpy(out.data(), values.data(), out.size());
  return out;
}

Bytes xor_stream(Bytes data, std::uint64_t key) {
  std::uint64_t state = splitmix64(key);
  for (std::size_t i = 0; i < data.size(); i += 8) {
    state = splitmix64(state);
    for (std::size_t b = 0; b < 8 && i + b < data.size(); ++b) {
      data[i + b] ^= static_cast<std::uint8_t>(state >> (8 * b));
    }
  }
  return data;
}

Bytes sha256(const Bytes& data) {
  Bytes digest(SHA256_DIGEST_LENGTH);
  SHA256(data.data(), data.size(), digest.data());
  return digest;
}

Bytes train_kernel(const Bytes& data, int iters, std::uint64_t seed) {
  Rng rng(seed);
  std::array<double, 8> w{};
  for (double& x : w) x = rng.uniform(-0.1, 0.1);
  const double rate = 0.01;
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double target = data[i] / 255.0;
      double& wi = w[i % w.size()];
      wi += rate * (target - std::tanh(wi));
    }
  }
  return pack_doubles(w);
}

Bytes evaluate_kernel(const Bytes& data, int iters) {
  std::array<double, 8> score{};
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double x = data[i] / 255.0;
      score[(i + it) % score.size()] += (x - 0.5) * (x - 0.5) / (1.0 + it);
    }
  }
  return pack_doubles(score);
}

}  // namespace

Bytes rle_encode(std::span<const std::uint8_t> data) {
  Bytes out;
  std::size_t i = 0;
  while (i < data.size()) {
    std::size_t run = 1;
    while (i + run < data.size() && run < 255 && data[i + run] == data[i]) ++run;
    out.push_back(static_cast<std::uint8_t>(run));
    out.push_back(data[i]);
    i += run;
  }
  return out;
}

Bytes rle_decode(std::span<const std::uint8_t> data) {
  if (data.size() % 2 != 0) throw Error(ErrorCode::kFormat, "RLE stream has odd length");
  Bytes out;
  for (std::size_t i = 0; i < data.size(); i += 2) {
    if (data[i] == 0) throw Error(ErrorCode::kFormat, "RLE run of length zero");
    out.insert(out.end(), data[i], data[i + 1]);
  }
  return out;
}

PayloadSet run_op(const OpKind& kind, std::span<const Payload> inputs, const Params& params,
                  std::uint64_t seed, std::uint32_t declared_inputs) {
  if (inputs.empty() || inputs.size() != declared_inputs) {
    throw Error(ErrorCode::kArity, kind.name() + " expects " + std::to_string(declared_inputs) +
                                       " inputs, got " + std::to_string(inputs.size()));
  }
  Bytes data = concat_logical(inputs);
  const int iters = static_cast<int>(param_or(params, "iters", 16));

  switch (kind.tag()) {
    case OpTag::kSort:
      std::sort(data.begin(), data.end());
      return {Payload(std::move(data))};
    case OpTag::kSearch: {
      std::sort(data.begin(), data.end());
      const auto needle = static_cast<std::uint8_t>(param_or(params, "needle", 0));
      const auto pos = static_cast<std::uint64_t>(
          std::lower_bound(data.begin(), data.end(), needle) - data.begin());
      Bytes out(8);
      for (int b = 0; b < 8; ++b) out[b] = static_cast<std::uint8_t>(pos >> (8 * b));
      return {Payload(std::move(out))};
    }
    case OpTag::kHash:
      return {Payload(sha256(data))};
    case OpTag::kEncrypt:
    case OpTag::kDecrypt:
      return {Payload(xor_stream(std::move(data),
                                 static_cast<std::uint64_t>(param_or(params, "key", 0))))};
    case OpTag::kCompress:
      return {Payload(rle_encode(data))};
    case OpTag::kDecompress:
      return {Payload(rle_decode(data))};
    case OpTag::kDownsample: {
      const double k = param_or(params, "k", 2);
      if (k < 1) throw Error(ErrorCode::kInvalidArgument, "Downsample needs k >= 1");
      const auto step = static_cast<std::size_t>(k);
      Bytes out;
      out.reserve(data.size() / step + 1);
      for (std::size_t i = 0; i < data.size(); i += step) out.push_back(data[i]);
      return {Payload(std::move(out))};
    }
    case OpTag::kNormalize: {
      if (data.empty()) return {Payload()};
      const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
      const int min = *lo;
      const int range = *hi - min;
      for (auto& x : data) {
        x = range == 0 ? 0 : static_cast<std::uint8_t>(((x - min) * 255 + range / 2) / range);
      }
      return {Payload(std::move(data))};
    }
    case OpTag::kSplit: {
      const auto parts = static_cast<std::size_t>(param_or(params, "parts", 2));
      if (parts < 1) throw Error(ErrorCode::kInvalidArgument, "Split needs parts >= 1");
      PayloadSet out;
      const std::size_t base = data.size() / parts;
      const std::size_t extra = data.size() % parts;
      std::size_t at = 0;
      for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t len = base + (p < extra ? 1 : 0);
        out.emplace_back(Bytes(data.begin() + at, data.begin() + at + len));
        at += len;
      }
      return out;
    }
    case OpTag::kTrain:
      return {Payload(train_kernel(data, iters, seed))};
    case OpTag::kEvaluate:
      return {Payload(evaluate_kernel(data, iters))};
    case OpTag::kFake: {
      std::uint64_t acc = seed;
      for (std::uint8_t x : data) acc = acc * 1099511628211ULL + x;
      Bytes out(8);
      for (int b = 0; b < 8; ++b) out[b] = static_cast<std::uint8_t>(acc >> (8 * b));
      return {Payload(std::move(out))};
    }
    case OpTag::kCustom:
      return {Payload(std::move(data))};
  }
  throw Error(ErrorCode::kInvalidArgument, "unhandled op kind");
}

}  // namespace shroud

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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "json.hpp"
#include "shroud/executor.hpp"
#include "shroud/graph.hpp"
#include "shroud/kv_config.hpp"
#include "shroud/payload.hpp"
#include "shroud/remodel.hpp"

namespace shroud {

inline constexpr std::size_t kDefaultMaxFrame = 64u << 20;
inline constexpr int kDefaultBatchTimeoutMs = 100;

struct ServiceConfig {
  std::string bind = "127.0.0.1:7070";  // host:port; port 0 picks a free one
  std::size_t max_frame = kDefaultMaxFrame;
  int batch_timeout_ms = kDefaultBatchTimeoutMs;
  ClockMode clock = ClockMode::kSimulated;

  // Keys: bind, max_frame, batch_timeout_ms, clock (sim|wall).
  static ServiceConfig from_kv(const KvConfig& cfg);
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
Bytes base64_decode(const std::string& text);  // format-error on bad input

nlohmann::json payload_to_json(const Payload& p);  // {data, logical_len}; physical bytes
Payload payload_from_json(const nlohmann::json& j);

nlohmann::json make_request(const ComputationGraph& graph, const PayloadSet& inputs,
                            const AnonymizationPlan& plan);
// Outputs of an ok response; protocol-error carrying the message otherwise.
PayloadSet response_outputs(const nlohmann::json& response);

// Frame = 4-byte big-endian length + UTF-8 JSON. Blocking helpers over a
// connected socket; io-error on a short read or write, protocol-error when
// the announced length exceeds max_frame.
void write_frame(int fd, const std::string& body);
std::string read_frame(int fd, std::size_t max_frame);

// One request/response exchange with a running server.
nlohmann::json call_engine(const std::string& host, std::uint16_t port,
                           const nlohmann::json& request, std::size_t max_frame = kDefaultMaxFrame);

class EngineServer {
 public:
  explicit EngineServer(ServiceConfig config);
  ~EngineServer();
  EngineServer(const EngineServer&) = delete;
  EngineServer& operator=(const EngineServer&) = delete;

  // Binds and starts accepting in the background; io-error if the address
  // cannot be bound.
  void start();
  std::uint16_t port() const;
  // Stops accepting, drains queued batches, joins all handlers.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Runs a server until `stop` becomes true (polled every few milliseconds).
void serve(const ServiceConfig& config, const std::atomic<bool>& stop);

}  // namespace shroud

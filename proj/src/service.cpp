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


#include "shroud/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <openssl/evp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <future>
#include <list>
#include <map>
#include <mutex>
#include <thread>

#include "shroud/error.hpp"
#include "shroud/hybrid.hpp"
#include "shroud/mixing.hpp"

namespace shroud {

using Json = nlohmann::json;
using SteadyClock = std::chrono::steady_clock;

namespace {

constexpr int kPollMs = 20;
constexpr int kSocketTimeoutSec = 30;

double since_ms(SteadyClock::time_point t0) {
  return std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
}

std::pair<std::string, std::uint16_t> split_host_port(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kConfig, "bind must be host:port");
  const std::string host = bind.substr(0, colon);
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(bind.substr(colon + 1), &used);
    if (used != bind.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::kConfig, "bad port in '" + bind + "'");
  return {host.empty() ? "0.0.0.0" : host, static_cast<std::uint16_t>(port)};
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string h = host == "localhost" ? "127.0.0.1" : host;
  if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
    throw Error(ErrorCode::kConfig, "bad IPv4 address '" + host + "'");
  }
  return addr;
}

void write_all(int fd, const void* data, std::size_t n) {
  const auto* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) throw Error(ErrorCode::kIo, std::string("send: ") + std::strerror(errno));
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

void read_all(int fd, void* data, std::size_t n) {
  auto* p = static_cast<char*>(data);
  while (n > 0) {
    const ssize_t r = ::recv(fd, p, n, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) throw Error(ErrorCode::kIo, "connection closed mid-frame");
    if (r < 0) throw Error(ErrorCode::kIo, std::string("recv: ") + std::strerror(errno));
    p += r;
    n -= static_cast<std::size_t>(r);
  }
}

void set_timeouts(int fd) {
  timeval tv{kSocketTimeoutSec, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

Json error_response(const std::string& message) {
  return {{"status", "error"}, {"message", message}};
}

Json ok_response(const PayloadSet& outputs, double anonymize_ms, double execute_ms,
                 std::size_t batch_used) {
  Json outs = Json::array();
  for (const auto& p : outputs) outs.push_back(payload_to_json(p));
  return {{"status", "ok"},
          {"outputs", outs},
          {"timing",
           {{"anonymize_ms", anonymize_ms},
            {"execute_ms", execute_ms},
            {"batch_size_used", batch_used}}}};
}

struct Pending {
  CompiledGraph graph;
  PayloadSet inputs;
  AnonymizationPlan plan;
  std::promise<Json> reply;
};

struct Group {
  std::vector<std::shared_ptr<Pending>> members;
  SteadyClock::time_point deadline;
};

std::string group_key(const AnonymizationPlan& p) {
  return std::string(mode_name(p.mode)) + "|" + std::to_string(p.level) + "|" + p.mask.name() +
         "|" + std::to_string(p.batch_size) + "|" + (p.parallel ? "par" : "seq") + "|" +
         std::to_string(p.workers);
}

}  // namespace

ServiceConfig ServiceConfig::from_kv(const KvConfig& cfg) {
  require_known_keys(cfg, {"bind", "max_frame", "batch_timeout_ms", "clock"});
  ServiceConfig c;
  auto number = [&](const std::string& key) -> long long {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(cfg.at(key), &used);
      if (used != cfg.at(key).size() || v < 0) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfig, "bad value for " + key);
    }
  };
  if (cfg.count("bind")) c.bind = cfg.at("bind");
  if (cfg.count("max_frame")) c.max_frame = static_cast<std::size_t>(number("max_frame"));
  if (cfg.count("batch_timeout_ms")) c.batch_timeout_ms = static_cast<int>(number("batch_timeout_ms"));
  if (cfg.count("clock")) {
    const std::string& v = cfg.at("clock");
    if (v != "sim" && v != "wall") throw Error(ErrorCode::kConfig, "clock must be sim or wall");
    c.clock = v == "sim" ? ClockMode::kSimulated : ClockMode::kWallClock;
  }
  split_host_port(c.bind);
  return c;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::kFormat, "base64 length not a multiple of 4");
  Bytes out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::kFormat, "invalid base64");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

Json payload_to_json(const Payload& p) {
  return {{"data", base64_encode(p.physical())}, {"logical_len", p.logical_len()}};
}

Payload payload_from_json(const Json& j) {
  try {
    Bytes bytes = base64_decode(j.at("data").get<std::string>());
    const std::size_t len = j.contains("logical_len") ? j.at("logical_len").get<std::size_t>()
                                                      : bytes.size();
    return Payload(std::move(bytes), len);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad payload: ") + e.what());
  }
}

Json make_request(const ComputationGraph& graph, const PayloadSet& inputs,
                  const AnonymizationPlan& plan) {
  Json in = Json::array();
  for (const auto& p : inputs) in.push_back(payload_to_json(p));
  return {{"graph", to_json(graph)}, {"inputs", in}, {"plan", plan.to_json()}};
}

PayloadSet response_outputs(const Json& response) {
  try {
    if (response.at("status").get<std::string>() != "ok") {
      throw Error(ErrorCode::kProtocol, response.value("message", std::string("error")));
    }
    PayloadSet out;
    for (const auto& p : response.at("outputs")) out.push_back(payload_from_json(p));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad response: ") + e.what());
  }
}

void write_frame(int fd, const std::string& body) {
  if (body.size() > 0xffffffffu) throw Error(ErrorCode::kProtocol, "frame too large");
  const auto n = static_cast<std::uint32_t>(body.size());
  const std::uint8_t header[4] = {static_cast<std::uint8_t>(n >> 24),
                                  static_cast<std::uint8_t>(n >> 16),
                                  static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
  write_all(fd, header, 4);
  write_all(fd, body.data(), body.size());
}

std::string read_frame(int fd, std::size_t max_frame) {
  std::uint8_t header[4];
  read_all(fd, header, 4);
  const std::size_t n = (std::size_t{header[0]} << 24) | (std::size_t{header[1]} << 16) |
                        (std::size_t{header[2]} << 8) | std::size_t{header[3]};
  if (n > max_frame) {
    throw Error(ErrorCode::kProtocol, "frame of " + std::to_string(n) + " bytes exceeds limit " +
                                          std::to_string(max_frame));
  }
  std::string body(n, '\0');
  read_all(fd, body.data(), n);
  return body;
}

Json call_engine(const std::string& host, std::uint16_t port, const Json& request,
                 std::size_t max_frame) {
  const sockaddr_in addr = make_addr(host, port);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::kIo, std::string("socket: ") + std::strerror(errno));
  struct Closer {
    int fd;
    ~Closer() { ::close(fd); }
  } closer{fd};
  set_timeouts(fd);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw Error(ErrorCode::kIo, std::string("connect: ") + std::strerror(errno));
  }
  write_frame(fd, request.dump());
  const std::string body = read_frame(fd, max_frame);
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("unparseable response: ") + e.what());
  }
}

struct EngineServer::Impl {
  ServiceConfig config;
  Clock clock;
  int listen_fd = -1;
  std::uint16_t port = 0;
  std::atomic<bool> stopping{false};
  std::thread acceptor;
  std::thread batcher;

  struct Handler {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::mutex handlers_mu;
  std::list<Handler> handlers;
  std::atomic<int> active{0};

  std::mutex queue_mu;
  std::condition_variable queue_cv;
  std::map<std::string, Group> groups;

  explicit Impl(ServiceConfig c)
      : config(std::move(c)), clock{config.clock, CostModel::defaults()} {}

  void accept_loop() {
    while (!stopping.load()) {
      pollfd pfd{listen_fd, POLLIN, 0};
      const int r = ::poll(&pfd, 1, kPollMs);
      if (r <= 0 || !(pfd.revents & POLLIN)) continue;
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) continue;
      set_timeouts(fd);
      std::lock_guard<std::mutex> lock(handlers_mu);
      for (auto it = handlers.begin(); it != handlers.end();) {
        if (it->done->load()) {
          it->thread.join();
          it = handlers.erase(it);
        } else {
          ++it;
        }
      }
      auto done = std::make_shared<std::atomic<bool>>(false);
      ++active;
      handlers.push_back({std::thread([this, fd, done] {
                            handle_connection(fd);
                            --active;
                            done->store(true);
                            queue_cv.notify_all();
                          }),
                          done});
    }
  }

  void handle_connection(int fd) {
    Json response;
    try {
      const std::string body = read_frame(fd, config.max_frame);
      Json request;
      try {
        request = Json::parse(body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kProtocol, std::string("malformed JSON: ") + e.what());
      }
      response = process(request);
    } catch (const Error& e) {
      response = error_response(e.what());
    } catch (const std::exception& e) {
      response = error_response(std::string("internal: ") + e.what());
    }
    try {
      write_frame(fd, response.dump());
    } catch (const Error&) {
    }
    ::close(fd);
  }

  Json process(const Json& request) {
    std::shared_ptr<Pending> pending;
    try {
      ComputationGraph graph = graph_from_json(request.at("graph"));
      PayloadSet inputs;
      for (const auto& p : request.at("inputs")) inputs.push_back(payload_from_json(p));
      AnonymizationPlan plan = AnonymizationPlan::from_json(request.at("plan"));
      plan.validate();
      CompiledGraph cg = compile(graph);
      if (inputs.size() != cg.sources().size()) {
        throw Error(ErrorCode::kInput, "graph has " + std::to_string(cg.sources().size()) +
                                           " sources but " + std::to_string(inputs.size()) +
                                           " inputs were sent");
      }
      if (plan.mode == Mode::kRemodeling) return run_remodel(cg, inputs, plan);
      pending = std::make_shared<Pending>(Pending{std::move(cg), std::move(inputs), plan, {}});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kProtocol, std::string("bad request: ") + e.what());
    }
    std::future<Json> reply = pending->reply.get_future();
    enqueue(pending);
    return reply.get();
  }

  Json run_remodel(const CompiledGraph& cg, const PayloadSet& inputs,
                   const AnonymizationPlan& plan) {
    const auto t0 = SteadyClock::now();
    const AnonymizedGraph ag = anonymize_remodel(cg, plan.level, plan.mask, plan.seed, clock.costs);
    const double anonymize_ms = since_ms(t0);
    const auto t1 = SteadyClock::now();
    const SingleRun run = execute_single(ag.graph, inputs, clock, plan.seed);
    const PayloadSet outs = strip_outputs(run.outputs, run.strip);
    return ok_response(outs, anonymize_ms, since_ms(t1), 1);
  }

  void enqueue(std::shared_ptr<Pending> p) {
    {
      std::lock_guard<std::mutex> lock(queue_mu);
      Group& g = groups[group_key(p->plan)];
      if (g.members.empty()) {
        g.deadline = SteadyClock::now() + std::chrono::milliseconds(config.batch_timeout_ms);
      }
      g.members.push_back(std::move(p));
    }
    queue_cv.notify_all();
  }

  // Removes and returns every group that is full, expired, or (when
  // draining) non-empty.
  std::vector<std::vector<std::shared_ptr<Pending>>> take_ready(bool drain) {
    std::vector<std::vector<std::shared_ptr<Pending>>> out;
    const auto now = SteadyClock::now();
    for (auto it = groups.begin(); it != groups.end();) {
      Group& g = it->second;
      const std::size_t want = g.members.front()->plan.batch_size;
      while (g.members.size() >= want) {
        out.emplace_back(g.members.begin(), g.members.begin() + static_cast<std::ptrdiff_t>(want));
        g.members.erase(g.members.begin(), g.members.begin() + static_cast<std::ptrdiff_t>(want));
        g.deadline = now + std::chrono::milliseconds(config.batch_timeout_ms);
      }
      if (!g.members.empty() && (drain || now >= g.deadline)) {
        out.push_back(std::move(g.members));
        g.members.clear();
      }
      it = g.members.empty() ? groups.erase(it) : std::next(it);
    }
    return out;
  }

  void batch_loop() {
    std::unique_lock<std::mutex> lock(queue_mu);
    for (;;) {
      const bool draining = stopping.load();
      auto ready = take_ready(draining);
      if (!ready.empty()) {
        lock.unlock();
        for (auto& batch : ready) run_batch(batch);
        lock.lock();
        continue;
      }
      if (draining && groups.empty() && active.load() == 0) return;
      auto wake = SteadyClock::now() + std::chrono::milliseconds(kPollMs);
      for (const auto& [key, g] : groups) wake = std::min(wake, g.deadline);
      queue_cv.wait_until(lock, wake);
    }
  }

  void run_batch(std::vector<std::shared_ptr<Pending>>& batch) {
    try {
      const AnonymizationPlan& plan = batch.front()->plan;
      std::vector<CompiledGraph> graphs;
      std::vector<PayloadSet> inputs;
      std::vector<double> weights;
      for (const auto& p : batch) {
        graphs.push_back(p->graph);
        inputs.push_back(p->inputs);
        weights.push_back(p->plan.weight_for(p->graph.graph().delay_class()));
      }
      const bool parallel = plan.parallel && plan.workers >= 2;
      const auto t0 = SteadyClock::now();
      std::vector<PayloadSet> outputs;
      std::vector<double> anonymize_ms(batch.size(), 0.0);
      if (plan.mode == Mode::kMixing) {
        MixBatch mb{std::move(graphs), std::move(weights), std::move(inputs), plan.seed};
        MixResult r = parallel ? mix_parallel(mb, plan.workers, clock) : mix_sequential(mb, clock);
        for (std::size_t i = 0; i < batch.size(); ++i) {
          outputs.push_back(strip_outputs(r.outputs[i], r.strip_maps[i]));
          anonymize_ms[i] = r.decision_ms[i];
        }
      } else {
        AnonymizationPlan hp = plan;
        hp.parallel = parallel;
        HybridResult r = anonymize_hybrid(graphs, inputs, hp, clock);
        outputs = std::move(r.outputs);
        for (std::size_t i = 0; i < batch.size(); ++i) {
          anonymize_ms[i] = r.remodel_ms[i] + r.decision_ms[i];
        }
      }
      const double total_ms = since_ms(t0);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        batch[i]->reply.set_value(
            ok_response(outputs[i], anonymize_ms[i], total_ms - anonymize_ms[i], batch.size()));
      }
    } catch (const std::exception& e) {
      for (auto& p : batch) p->reply.set_value(error_response(e.what()));
    }
  }
};

EngineServer::EngineServer(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

EngineServer::~EngineServer() { stop(); }

void EngineServer::start() {
  Impl& m = *impl_;
  if (m.listen_fd >= 0) throw Error(ErrorCode::kState, "server already started");
  const auto [host, port] = split_host_port(m.config.bind);
  const sockaddr_in addr = make_addr(host, port);
  m.listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (m.listen_fd < 0) throw Error(ErrorCode::kIo, std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(m.listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(m.listen_fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(m.listen_fd, 64) != 0) {
    const std::string why = std::strerror(errno);
    ::close(m.listen_fd);
    m.listen_fd = -1;
    throw Error(ErrorCode::kIo, "cannot bind " + m.config.bind + ": " + why);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(m.listen_fd, reinterpret_cast<sockaddr*>(&bound), &len);
  m.port = ntohs(bound.sin_port);
  m.stopping = false;
  m.batcher = std::thread([&m] { m.batch_loop(); });
  m.acceptor = std::thread([&m] { m.accept_loop(); });
}

std::uint16_t EngineServer::port() const { return impl_->port; }

void EngineServer::stop() {
  Impl& m = *impl_;
  if (m.listen_fd < 0) return;
  m.stopping = true;
  if (m.acceptor.joinable()) m.acceptor.join();
  m.queue_cv.notify_all();
  if (m.batcher.joinable()) m.batcher.join();
  std::list<Impl::Handler> handlers;
  {
    std::lock_guard<std::mutex> lock(m.handlers_mu);
    handlers.swap(m.handlers);
  }
  for (auto& h : handlers) h.thread.join();
  ::close(m.listen_fd);
  m.listen_fd = -1;
}

void serve(const ServiceConfig& config, const std::atomic<bool>& stop) {
  EngineServer server(config);
  server.start();
  while (!stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(kPollMs));
  server.stop();
}

}  // namespace shroud

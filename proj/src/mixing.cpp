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

#include "shroud/mixing.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "shroud/error.hpp"
#include "shroud/remodel.hpp"

namespace shroud {

namespace {

using SteadyClock = std::chrono::steady_clock;

double ms_between(SteadyClock::time_point a, SteadyClock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

// Ready sets and pending in-degrees of every graph in a batch.
struct Frontiers {
  std::vector<std::vector<std::uint32_t>> remaining;
  std::vector<std::vector<NodeId>> ready;
  std::size_t total = 0;

  explicit Frontiers(const MixBatch& batch) {
    for (const CompiledGraph& cg : batch.graphs) {
      remaining.push_back(cg.in_degree());
      ready.emplace_back();
      for (NodeId v = 0; v < cg.size(); ++v) {
        if (remaining.back()[v] == 0) ready.back().push_back(v);
      }
      total += cg.size();
    }
  }

  void take(const Pick& p) { ready[p.graph].erase(ready[p.graph].begin()); }

  void release(const MixBatch& batch, std::size_t g, NodeId node) {
    for (NodeId s : batch.graphs[g].successors(node)) {
      if (--remaining[g][s] == 0) {
        auto& f = ready[g];
        f.insert(std::upper_bound(f.begin(), f.end(), s), s);
      }
    }
  }

  bool empty() const {
    return std::all_of(ready.begin(), ready.end(), [](const auto& f) { return f.empty(); });
  }
};

constexpr int kCostReplays = 3;

// Replays the sequential selection order without running kernels and times
// the whole loop, so per-call timer overhead stays out of the figure. The
// fastest pass is split across graphs by their share of the selections.
std::vector<double> selection_cost(const MixBatch& batch) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t total = 0;
  for (int rep = 0; rep < kCostReplays; ++rep) {
    Frontiers fr(batch);
    total = fr.total;
    Rng rng(derive_seed(batch.seed, "pick"));
    const auto t0 = SteadyClock::now();
    for (std::size_t i = 0; i < fr.total; ++i) {
      const Pick p = pick_next(fr.ready, batch.weights, rng);
      fr.take(p);
      fr.release(batch, p.graph, p.node);
    }
    best = std::min(best, ms_between(t0, SteadyClock::now()));
  }
  std::vector<double> out;
  for (const auto& g : batch.graphs) {
    out.push_back(best * static_cast<double>(g.size()) / static_cast<double>(total));
  }
  return out;
}

// Execution state shared by both mixers. Not synchronized; the parallel
// mixer guards it with its own mutex.
class BatchState {
 public:
  explicit BatchState(const MixBatch& batch) : frontiers(batch), batch_(batch) {
    for (std::size_t g = 0; g < batch.graphs.size(); ++g) {
      runs.emplace_back(batch.graphs[g], batch.inputs[g], batch.seed);
    }
    total = frontiers.total;
  }

  Pick pick(Rng& rng) {
    const Pick p = pick_next(frontiers.ready, batch_.weights, rng, &stats);
    frontiers.take(p);
    ++picked;
    return p;
  }

  void release(std::size_t g, NodeId node) { frontiers.release(batch_, g, node); }
  bool frontier_empty() const { return frontiers.empty(); }

  MixResult finish(Schedule schedule) {
    MixResult out;
    std::vector<GraphAccounting> accounting;
    for (const auto& run : runs) {
      auto outcome = run.finish();
      out.outputs.push_back(std::move(outcome.outputs));
      out.strip_maps.push_back(std::move(outcome.strip));
      accounting.push_back(std::move(outcome.accounting));
    }
    out.records = collect_features(schedule, batch_.graphs, accounting);
    out.schedule = std::move(schedule);
    out.decision_ms = selection_cost(batch_);
    out.stats = stats;
    return out;
  }

  std::vector<GraphRun> runs;
  Frontiers frontiers;
  PickStats stats;
  std::size_t total = 0;
  std::size_t picked = 0;

 private:
  const MixBatch& batch_;
};

struct Completion {
  double end_ms;
  std::uint64_t seq;
  std::size_t graph;
  NodeId node;
  bool operator<(const Completion& o) const {
    return end_ms != o.end_ms ? end_ms < o.end_ms : seq < o.seq;
  }
};

MixResult mix_parallel_simulated(const MixBatch& batch, unsigned workers, const Clock& clock) {
  BatchState st(batch);
  Rng rng(derive_seed(batch.seed, "pick"));
  std::mutex mu;
  std::condition_variable cv;
  std::vector<double> avail(workers, 0.0);
  std::set<Completion> pending;
  std::vector<std::vector<bool>> committed;
  for (const auto& g : batch.graphs) committed.emplace_back(g.size(), false);
  Schedule schedule;
  std::uint64_t seq = 0;
  std::exception_ptr failure;
  constexpr double kDone = std::numeric_limits<double>::infinity();

  auto is_turn = [&](unsigned w) {
    for (unsigned o = 0; o < workers; ++o) {
      if (avail[o] < avail[w] || (avail[o] == avail[w] && o < w)) return false;
    }
    return true;
  };

  auto worker = [&](unsigned w) {
    std::unique_lock lk(mu);
    while (true) {
      cv.wait(lk, [&] { return failure || is_turn(w); });
      if (failure) return;
      if (st.picked == st.total) {
        avail[w] = kDone;
        cv.notify_all();
        return;
      }
      const double now = avail[w];
      while (!pending.empty() && pending.begin()->end_ms <= now) {
        const Completion ev = *pending.begin();
        cv.wait(lk, [&] { return failure || committed[ev.graph][ev.node]; });
        if (failure) return;
        pending.erase(pending.begin());
        st.release(ev.graph, ev.node);
      }
      if (st.frontier_empty()) {
        // Producers still running in virtual time: idle until the next one ends.
        avail[w] = pending.empty() ? kDone : pending.begin()->end_ms;
        cv.notify_all();
        if (pending.empty()) return;
        continue;
      }
      const Pick p = st.pick(rng);
      const NodeCost cost = st.runs[p.graph].cost(p.node, clock.costs);
      avail[w] = now + cost.time_ms;
      pending.insert({avail[w], seq++, p.graph, p.node});
      schedule.entries.push_back({p.graph, p.node, now, avail[w], w});
      cv.notify_all();

      lk.unlock();
      PayloadSet outs;
      std::exception_ptr err;
      try {
        outs = st.runs[p.graph].run(p.node);
      } catch (...) {
        err = std::current_exception();
      }
      lk.lock();
      if (err) {
        failure = err;
        cv.notify_all();
        return;
      }
      st.runs[p.graph].commit(p.node, std::move(outs), cost.busy_ms, cost.mem_bytes);
      committed[p.graph][p.node] = true;
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) threads.emplace_back(worker, w);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  schedule.canonicalize();
  return st.finish(std::move(schedule));
}

MixResult mix_parallel_wall(const MixBatch& batch, unsigned workers, const Clock& clock) {
  BatchState st(batch);
  Rng rng(derive_seed(batch.seed, "pick"));
  std::mutex mu;
  std::condition_variable cv;
  Schedule schedule;
  std::exception_ptr failure;
  const auto t0 = SteadyClock::now();

  auto worker = [&](unsigned w) {
    std::unique_lock lk(mu);
    while (true) {
      cv.wait(lk, [&] { return failure || st.picked == st.total || !st.frontier_empty(); });
      if (failure || st.picked == st.total) return;
      const Pick p = st.pick(rng);
      const NodeCost cost = st.runs[p.graph].cost(p.node, clock.costs);
      lk.unlock();
      const double start = ms_between(t0, SteadyClock::now());
      PayloadSet outs;
      std::exception_ptr err;
      try {
        outs = st.runs[p.graph].run(p.node);
      } catch (...) {
        err = std::current_exception();
      }
      const double end = ms_between(t0, SteadyClock::now());
      lk.lock();
      if (err) {
        failure = err;
        cv.notify_all();
        return;
      }
      st.runs[p.graph].commit(p.node, std::move(outs), end - start, cost.mem_bytes);
      schedule.entries.push_back({p.graph, p.node, start, end, w});
      st.release(p.graph, p.node);
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) threads.emplace_back(worker, w);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  schedule.canonicalize();
  return st.finish(std::move(schedule));
}

}  // namespace

MixBatch MixBatch::with_default_weights(std::vector<CompiledGraph> graphs,
                                        std::vector<PayloadSet> inputs, std::uint64_t seed) {
  MixBatch b{std::move(graphs), {}, std::move(inputs), seed};
  for (const auto& g : b.graphs) b.weights.push_back(default_weight(g.graph().delay_class()));
  return b;
}

void MixBatch::validate() const {
  if (graphs.empty()) throw Error(ErrorCode::kInvalidArgument, "mix batch is empty");
  if (weights.size() != graphs.size() || inputs.size() != graphs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "weights/inputs must match the batch size");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mixing weights must be > 0");
  }
}

Pick pick_next(std::span<const std::vector<NodeId>> frontiers, std::span<const double> weights,
               Rng& rng, PickStats* stats) {
  double total = 0.0;
  for (std::size_t i = 0; i < frontiers.size(); ++i) {
    if (!frontiers[i].empty()) total += weights[i];
  }
  if (stats) {
    ++stats->selections;
    stats->candidates_scanned += frontiers.size();
  }
  if (total <= 0.0) throw Error(ErrorCode::kExhausted, "no graph has a ready node");
  double r = rng.uniform() * total;
  std::size_t chosen = frontiers.size();
  for (std::size_t i = 0; i < frontiers.size(); ++i) {
    if (frontiers[i].empty()) continue;
    chosen = i;
    if (r < weights[i]) break;
    r -= weights[i];
  }
  return {chosen, frontiers[chosen].front()};
}

MixResult mix_sequential(const MixBatch& batch, const Clock& clock) {
  batch.validate();
  BatchState st(batch);
  Rng rng(derive_seed(batch.seed, "pick"));
  Schedule schedule;
  const auto t0 = SteadyClock::now();
  double now = 0.0;
  while (st.picked < st.total) {
    const Pick p = st.pick(rng);
    GraphRun& run = st.runs[p.graph];
    const NodeCost cost = run.cost(p.node, clock.costs);
    if (clock.mode == ClockMode::kSimulated) {
      run.commit(p.node, run.run(p.node), cost.busy_ms, cost.mem_bytes);
      schedule.entries.push_back({p.graph, p.node, now, now + cost.time_ms, 0});
      now += cost.time_ms;
    } else {
      const double start = ms_between(t0, SteadyClock::now());
      PayloadSet outs = run.run(p.node);
      const double end = ms_between(t0, SteadyClock::now());
      run.commit(p.node, std::move(outs), end - start, cost.mem_bytes);
      schedule.entries.push_back({p.graph, p.node, start, end, 0});
    }
    st.release(p.graph, p.node);
  }
  return st.finish(std::move(schedule));
}

MixResult mix_parallel(const MixBatch& batch, unsigned workers, const Clock& clock) {
  batch.validate();
  if (workers < 2) throw Error(ErrorCode::kInvalidArgument, "parallel mixing needs >= 2 workers");
  return clock.mode == ClockMode::kSimulated ? mix_parallel_simulated(batch, workers, clock)
                                             : mix_parallel_wall(batch, workers, clock);
}

std::vector<double> anonymization_cost(const MixBatch& batch) {
  batch.validate();
  return selection_cost(batch);
}

}  // namespace shroud

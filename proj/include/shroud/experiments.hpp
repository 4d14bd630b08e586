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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shroud/attack.hpp"
#include "shroud/executor.hpp"
#include "shroud/kv_config.hpp"
#include "shroud/remodel.hpp"
#include "shroud/workloads.hpp"

namespace shroud {

// One column of the experiment matrix.
struct RunConfig {
  std::string name;
  Mode mode = Mode::kRemodeling;
  bool baseline = false;
  int level = kMinLevel;
  FeatureMask mask = FeatureMask::all();
  std::size_t batch_size = 1;
  bool parallel = false;
  unsigned workers = kDefaultWorkers;

  static RunConfig make_baseline();
  static RunConfig remodel(int level, FeatureMask mask);
  static RunConfig mixing(std::size_t batch, bool parallel);
  static RunConfig hybrid(int level, std::size_t batch, bool parallel);
};

// Worker count for the parallel configurations of the sweep. With batches of
// 2 to 5 small graphs, a larger pool leaves most batches under-subscribed.
inline constexpr unsigned kSweepWorkers = 2;

struct Sweep {
  std::vector<int> levels{1, 2, 3, 4, 5};
  std::vector<std::string> masks{"in", "out", "both", "time", "all"};
  std::vector<std::size_t> batches{2, 3, 4, 5};
  std::vector<int> hybrid_levels{1, 2, 3, 4, 5};
  unsigned workers = kSweepWorkers;

  // Keys: levels, masks, batches, hybrid_levels, workers. config-error on
  // anything else.
  static Sweep from_kv(const KvConfig& cfg);
  std::vector<RunConfig> configs() const;  // baseline first
};

struct PreparedSample {
  CompiledGraph graph;
  PayloadSet inputs;
};
std::vector<PreparedSample> prepare(std::span<const Sample> samples);

struct ConfigRun {
  std::vector<FeatureRecord> records;  // sample order
  std::vector<double> anonymize_ms;    // wall clock, per sample
};

inline constexpr int kTimingRepeats = 3;

// Runs every sample under `cfg`. Mixing and hybrid configs group samples into
// seeded random batches of cfg.batch_size.
ConfigRun run_config(std::span<const PreparedSample> samples, const RunConfig& cfg,
                     const Clock& clock, std::uint64_t seed);

// Wall-clock anonymize_remodel cost, [config][sample], for remodel configs
// with per-config seeds (sample i uses derive_seed(seeds[c], i)). Configs are
// timed round-robin per sample over kTimingRepeats passes, keeping each
// sample's fastest time, so slow spells of the machine hit every config.
std::vector<std::vector<double>> remodel_costs(std::span<const PreparedSample> samples,
                                               std::span<const RunConfig> configs,
                                               const Clock& clock,
                                               std::span<const std::uint64_t> seeds);

// Seeds derived from one master seed, one stream per pipeline stage.
struct StageSeeds {
  std::uint64_t gen, run, split, fit;
  static StageSeeds from_master(std::uint64_t master);
};

inline constexpr double kTrainFraction = 0.7;

// Cost model JSON in the format of data/cost_model.json; config-error if it
// is malformed.
CostModel load_cost_model(const std::filesystem::path& path);

// Model kinds ("knn,dtree,mlp") with hyperparameter overrides. Keys: k,
// max_depth, min_split, hidden_units, epochs, learning_rate.
std::vector<ModelSpec> parse_model_list(const std::string& kinds, const KvConfig& hyper);

// gen: writes the dataset for `classes` (all built-in classes when empty).
void cmd_gen(std::size_t classes, std::size_t samples, std::uint64_t seed,
             const std::filesystem::path& out);

// run: features/<config>.csv, timing.csv, overhead.csv, configs.json.
void cmd_run(const std::filesystem::path& dataset, const Sweep& sweep, const Clock& clock,
             std::uint64_t seed, const std::filesystem::path& out);

struct AttackOptions {
  std::vector<ModelSpec> models{ModelSpec::knn(), ModelSpec::decision_tree(), ModelSpec::mlp()};
  bool reduced_features = false;
  // Configurations that also get an adaptively retrained attacker.
  std::vector<std::string> adaptive{"remodel_L5_all", "mix_seq_B5", "mix_par_B5",
                                    "hybrid_par_L5_B5"};
};

// attack: report.json and summary.csv (config,model,accuracy,adaptive_accuracy).
void cmd_attack(const std::filesystem::path& results, const AttackOptions& options,
                std::uint64_t seed, const std::filesystem::path& out);

// report: report.txt from summary.csv and overhead.csv (deterministic), and
// timing_report.txt from timing.csv (wall clock, varies run to run).
void cmd_report(const std::filesystem::path& dir);

// Parsed summary.csv rows.
struct AccuracyRow {
  std::string config;
  std::string model;
  double accuracy = 0.0;
  double adaptive_accuracy = -1.0;  // -1 when not computed
};
std::vector<AccuracyRow> read_summary(const std::filesystem::path& path);

struct OverheadRow {
  std::string config;
  double time_ratio = 0.0;
  double cpu_ratio = 0.0;
  double mem_ratio = 0.0;
};
std::vector<OverheadRow> read_overheads(const std::filesystem::path& path);

// Mean wall-clock anonymization cost per graph, by configuration, from
// timing.csv (config,sample,anonymize_ms).
struct TimingRow {
  std::string config;
  double mean_anonymize_ms = 0.0;
};
std::vector<TimingRow> read_timing(const std::filesystem::path& path);

}  // namespace shroud

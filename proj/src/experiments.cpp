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


#include "shroud/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "shroud/error.hpp"
#include "shroud/hybrid.hpp"
#include "shroud/mixing.hpp"
#include "shroud/rng.hpp"

namespace shroud {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr const char* kBaseline = "baseline";

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return in;
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const fs::path& file) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormat, "bad number '" + s + "' in " + file.string());
  }
}

template <typename T>
std::vector<T> parse_numbers(const std::string& text, const std::string& key) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfig, "bad value '" + item + "' for " + key);
    }
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, key + " is empty");
  return out;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string pct(double accuracy) { return fmt("%.1f", 100.0 * accuracy); }

// Fixed-width text table; first column left-aligned, the rest right-aligned.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : rows_{std::move(header)} {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void render(std::ostream& out, const std::string& title) const {
    std::vector<std::size_t> width(rows_.front().size(), 0);
    for (const auto& r : rows_) {
      for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) {
        width[c] = std::max(width[c], r[c].size());
      }
    }
    out << title << "\n";
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      std::string line;
      for (std::size_t c = 0; c < width.size(); ++c) {
        const std::string cell = c < rows_[i].size() ? rows_[i][c] : "";
        const std::string pad(width[c] - cell.size(), ' ');
        if (c > 0) line += "  ";
        line += c == 0 ? cell + pad : pad + cell;
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out << line << "\n";
      if (i == 0) {
        std::size_t total = 0;
        for (auto w : width) total += w;
        out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
      }
    }
    out << "\n";
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string variant(bool parallel) { return parallel ? "par" : "seq"; }

}  // namespace

RunConfig RunConfig::make_baseline() {
  RunConfig c;
  c.name = kBaseline;
  c.baseline = true;
  c.mask = FeatureMask::none();
  return c;
}

RunConfig RunConfig::remodel(int level, FeatureMask mask) {
  RunConfig c;
  c.name = "remodel_L" + std::to_string(level) + "_" + mask.name();
  c.mode = Mode::kRemodeling;
  c.level = level;
  c.mask = mask;
  return c;
}

RunConfig RunConfig::mixing(std::size_t batch, bool parallel) {
  RunConfig c;
  c.name = "mix_" + variant(parallel) + "_B" + std::to_string(batch);
  c.mode = Mode::kMixing;
  c.mask = FeatureMask::none();
  c.batch_size = batch;
  c.parallel = parallel;
  return c;
}

RunConfig RunConfig::hybrid(int level, std::size_t batch, bool parallel) {
  RunConfig c;
  c.name = "hybrid_" + variant(parallel) + "_L" + std::to_string(level) + "_B" +
           std::to_string(batch);
  c.mode = Mode::kHybrid;
  c.level = level;
  c.batch_size = batch;
  c.parallel = parallel;
  return c;
}

Sweep Sweep::from_kv(const KvConfig& cfg) {
  require_known_keys(cfg, {"levels", "masks", "batches", "hybrid_levels", "workers"});
  Sweep s;
  if (auto it = cfg.find("levels"); it != cfg.end()) s.levels = parse_numbers<int>(it->second, "levels");
  if (auto it = cfg.find("hybrid_levels"); it != cfg.end()) {
    s.hybrid_levels = parse_numbers<int>(it->second, "hybrid_levels");
  }
  if (auto it = cfg.find("batches"); it != cfg.end()) {
    s.batches = parse_numbers<std::size_t>(it->second, "batches");
  }
  if (auto it = cfg.find("masks"); it != cfg.end()) {
    s.masks = split_list(it->second);
    for (const auto& m : s.masks) {
      try {
        FeatureMask::parse(m);
      } catch (const Error& e) {
        throw Error(ErrorCode::kConfig, e.what());
      }
    }
  }
  if (auto it = cfg.find("workers"); it != cfg.end()) {
    const auto w = parse_numbers<unsigned>(it->second, "workers");
    if (w.size() != 1 || w[0] < 2) throw Error(ErrorCode::kConfig, "workers must be one value >= 2");
    s.workers = w[0];
  }
  for (int l : s.levels) {
    if (l < kMinLevel || l > kMaxLevel) throw Error(ErrorCode::kConfig, "level out of range");
  }
  for (int l : s.hybrid_levels) {
    if (l < kMinLevel || l > kMaxLevel) throw Error(ErrorCode::kConfig, "level out of range");
  }
  for (auto b : s.batches) {
    if (b < 1) throw Error(ErrorCode::kConfig, "batch size must be >= 1");
  }
  return s;
}

std::vector<RunConfig> Sweep::configs() const {
  std::vector<RunConfig> out{RunConfig::make_baseline()};
  for (int level : levels) {
    for (const auto& m : masks) out.push_back(RunConfig::remodel(level, FeatureMask::parse(m)));
  }
  for (bool parallel : {false, true}) {
    for (auto b : batches) {
      out.push_back(RunConfig::mixing(b, parallel));
      out.back().workers = workers;
    }
  }
  for (bool parallel : {false, true}) {
    for (int level : hybrid_levels) {
      for (auto b : batches) {
        out.push_back(RunConfig::hybrid(level, b, parallel));
        out.back().workers = workers;
      }
    }
  }
  return out;
}

std::vector<PreparedSample> prepare(std::span<const Sample> samples) {
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    ComputationGraph g = s.graph;
    out.push_back({compile(std::move(g)), s.inputs});
  }
  return out;
}

namespace {

ConfigRun run_baseline(std::span<const PreparedSample> samples, const Clock& clock,
                       std::uint64_t seed) {
  ConfigRun out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.records.push_back(
        execute_single(samples[i].graph, samples[i].inputs, clock, derive_seed(seed, i)).record);
    out.anonymize_ms.push_back(0.0);
  }
  return out;
}

ConfigRun run_remodel(std::span<const PreparedSample> samples, const RunConfig& cfg,
                      const Clock& clock, std::uint64_t seed) {
  ConfigRun out;
  out.anonymize_ms = remodel_costs(samples, std::span(&cfg, 1), clock, std::span(&seed, 1)).front();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::uint64_t s = derive_seed(seed, i);
    const AnonymizedGraph ag = anonymize_remodel(samples[i].graph, cfg.level, cfg.mask, s, clock.costs);
    out.records.push_back(execute_single(ag.graph, samples[i].inputs, clock, s).record);
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch,
                                                   std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "batches"));
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch)));
  }
  return out;
}

ConfigRun run_batched(std::span<const PreparedSample> samples, const RunConfig& cfg,
                      const Clock& clock, std::uint64_t seed) {
  ConfigRun out;
  out.records.resize(samples.size());
  out.anonymize_ms.resize(samples.size());
  const auto batches = make_batches(samples.size(), cfg.batch_size, seed);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto& members = batches[b];
    std::vector<CompiledGraph> graphs;
    std::vector<PayloadSet> inputs;
    for (auto i : members) {
      graphs.push_back(samples[i].graph);
      inputs.push_back(samples[i].inputs);
    }
    const std::uint64_t batch_seed = derive_seed(seed, b);
    std::vector<FeatureRecord> records;
    std::vector<double> cost;
    if (cfg.mode == Mode::kMixing) {
      const MixBatch batch =
          MixBatch::with_default_weights(std::move(graphs), std::move(inputs), batch_seed);
      MixResult r = cfg.parallel && cfg.workers >= 2 ? mix_parallel(batch, cfg.workers, clock)
                                                     : mix_sequential(batch, clock);
      records = std::move(r.records);
      cost = std::move(r.decision_ms);
    } else {
      AnonymizationPlan plan;
      plan.mode = Mode::kHybrid;
      plan.level = cfg.level;
      plan.mask = cfg.mask;
      plan.batch_size = cfg.batch_size;
      plan.parallel = cfg.parallel;
      plan.workers = cfg.workers;
      plan.seed = batch_seed;
      HybridResult r = anonymize_hybrid(graphs, inputs, plan, clock);
      records = std::move(r.records);
      for (std::size_t j = 0; j < members.size(); ++j) {
        cost.push_back(r.remodel_ms[j] + r.decision_ms[j]);
      }
    }
    for (std::size_t j = 0; j < members.size(); ++j) {
      out.records[members[j]] = records[j];
      out.anonymize_ms[members[j]] = cost[j];
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> remodel_costs(std::span<const PreparedSample> samples,
                                               std::span<const RunConfig> configs,
                                               const Clock& clock,
                                               std::span<const std::uint64_t> seeds) {
  if (seeds.size() != configs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one seed per configuration");
  }
  std::vector<std::vector<double>> best(
      configs.size(), std::vector<double>(samples.size(), std::numeric_limits<double>::infinity()));
  for (int pass = 0; pass < kTimingRepeats; ++pass) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t c = 0; c < configs.size(); ++c) {
        const std::uint64_t s = derive_seed(seeds[c], i);
        const auto t0 = std::chrono::steady_clock::now();
        const AnonymizedGraph ag =
            anonymize_remodel(samples[i].graph, configs[c].level, configs[c].mask, s, clock.costs);
        best[c][i] = std::min(best[c][i], elapsed_ms(t0));
      }
    }
  }
  return best;
}

ConfigRun run_config(std::span<const PreparedSample> samples, const RunConfig& cfg,
                     const Clock& clock, std::uint64_t seed) {
  if (cfg.baseline) return run_baseline(samples, clock, seed);
  if (cfg.mode == Mode::kRemodeling) return run_remodel(samples, cfg, clock, seed);
  if (cfg.batch_size < 1) throw Error(ErrorCode::kConfig, cfg.name + ": batch size must be >= 1");
  return run_batched(samples, cfg, clock, seed);
}

StageSeeds StageSeeds::from_master(std::uint64_t master) {
  return {derive_seed(master, "gen"), derive_seed(master, "run"), derive_seed(master, "split"),
          derive_seed(master, "fit")};
}

CostModel load_cost_model(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return CostModel::from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

std::vector<ModelSpec> parse_model_list(const std::string& kinds, const KvConfig& hyper) {
  require_known_keys(hyper, {"k", "max_depth", "min_split", "hidden_units", "epochs",
                             "learning_rate"});
  auto number = [&](const std::string& key) -> std::optional<double> {
    auto it = hyper.find(key);
    if (it == hyper.end()) return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfig, "bad value for " + key);
    }
  };
  std::vector<ModelSpec> out;
  for (const auto& name : split_list(kinds)) {
    ModelSpec spec;
    try {
      spec = ModelSpec::parse(name);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, e.what());
    }
    if (auto v = number("k")) spec.k = static_cast<int>(*v);
    if (auto v = number("max_depth")) spec.max_depth = static_cast<int>(*v);
    if (auto v = number("min_split")) spec.min_split = static_cast<int>(*v);
    if (auto v = number("hidden_units")) spec.hidden_units = static_cast<int>(*v);
    if (auto v = number("epochs")) spec.epochs = static_cast<int>(*v);
    if (auto v = number("learning_rate")) spec.learning_rate = *v;
    if (spec.k < 1 || spec.min_split < 2 || spec.hidden_units < 1 || spec.epochs < 0 ||
        spec.max_depth < 0 || !(spec.learning_rate > 0)) {
      throw Error(ErrorCode::kConfig, "hyperparameter out of range");
    }
    out.push_back(spec);
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, "no models requested");
  return out;
}

void cmd_gen(std::size_t classes, std::size_t samples, std::uint64_t seed, const fs::path& out) {
  std::vector<WorkloadClass> suite = default_class_suite();
  if (classes == 0 || classes > suite.size()) {
    throw Error(ErrorCode::kConfig,
                "classes must be in 1.." + std::to_string(suite.size()));
  }
  suite.resize(classes);
  write_dataset(out, generate_dataset(suite, samples, StageSeeds::from_master(seed).gen));
}

void cmd_run(const fs::path& dataset, const Sweep& sweep, const Clock& clock, std::uint64_t seed,
             const fs::path& out) {
  if (!fs::exists(dataset / "manifest.json")) {
    throw Error(ErrorCode::kConfig, "no dataset at " + dataset.string());
  }
  const auto samples = prepare(read_dataset(dataset));
  make_dirs(out / "features");
  const std::uint64_t run_seed = StageSeeds::from_master(seed).run;

  std::vector<FeatureRecord> baseline;
  std::ofstream timing = open_out(out / "timing.csv");
  timing << "config,sample,anonymize_ms\n";
  std::ofstream overhead = open_out(out / "overhead.csv");
  overhead << "config,time_ratio,cpu_ratio,mem_ratio\n";
  Json configs = Json::array();

  // Remodel costs are measured together so that all levels and masks see the
  // same machine conditions.
  std::vector<RunConfig> remodels;
  std::vector<std::uint64_t> remodel_seeds;
  for (const RunConfig& cfg : sweep.configs()) {
    if (!cfg.baseline && cfg.mode == Mode::kRemodeling) {
      remodels.push_back(cfg);
      remodel_seeds.push_back(derive_seed(run_seed, cfg.name));
    }
  }
  const auto remodel_ms = remodel_costs(samples, remodels, clock, remodel_seeds);

  for (const RunConfig& cfg : sweep.configs()) {
    ConfigRun run = run_config(samples, cfg, clock, derive_seed(run_seed, cfg.name));
    for (std::size_t c = 0; c < remodels.size(); ++c) {
      if (remodels[c].name == cfg.name) run.anonymize_ms = remodel_ms[c];
    }
    {
      std::ofstream f = open_out(out / "features" / (cfg.name + ".csv"));
      write_feature_csv(f, run.records);
    }
    if (cfg.baseline) baseline = run.records;
    for (std::size_t i = 0; i < run.anonymize_ms.size(); ++i) {
      timing << cfg.name << "," << i << "," << format_double(run.anonymize_ms[i]) << "\n";
    }
    Overheads sum;
    for (std::size_t i = 0; i < run.records.size(); ++i) {
      const Overheads o = normalized_overheads(run.records[i], baseline.at(i));
      sum.time_ratio += o.time_ratio;
      sum.cpu_ratio += o.cpu_ratio;
      sum.mem_ratio += o.mem_ratio;
    }
    const auto n = static_cast<double>(run.records.size());
    overhead << cfg.name << "," << format_double(sum.time_ratio / n) << ","
             << format_double(sum.cpu_ratio / n) << "," << format_double(sum.mem_ratio / n)
             << "\n";
    configs.push_back({{"name", cfg.name},
                       {"baseline", cfg.baseline},
                       {"mode", std::string(mode_name(cfg.mode))},
                       {"level", cfg.level},
                       {"mask", cfg.mask.name()},
                       {"batch_size", cfg.batch_size},
                       {"parallel", cfg.parallel},
                       {"workers", cfg.workers}});
  }
  Json meta = {{"seed", seed},
               {"clock", clock.mode == ClockMode::kSimulated ? "sim" : "wall"},
               {"samples", samples.size()},
               {"cost_model", clock.costs.to_json()},
               {"configs", configs}};
  std::ofstream f = open_out(out / "configs.json");
  f << meta.dump(2) << "\n";
}

namespace {

std::vector<std::string> config_order(const fs::path& results) {
  std::vector<std::string> names;
  if (fs::exists(results / "configs.json")) {
    std::ifstream in = open_in(results / "configs.json");
    try {
      const Json j = Json::parse(in);
      for (const auto& c : j.at("configs")) names.push_back(c.at("name").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, std::string("configs.json: ") + e.what());
    }
    return names;
  }
  for (const auto& entry : fs::directory_iterator(results / "features")) {
    if (entry.path().extension() == ".csv") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<FeatureRecord> load_features(const fs::path& path) {
  std::ifstream in = open_in(path);
  return read_feature_csv(in);
}

}  // namespace

void cmd_attack(const fs::path& results, const AttackOptions& options, std::uint64_t seed,
                const fs::path& out) {
  const fs::path base_path = results / "features" / (std::string(kBaseline) + ".csv");
  if (!fs::exists(base_path)) {
    throw Error(ErrorCode::kConfig, "missing baseline features at " + base_path.string());
  }
  make_dirs(out);
  const StageSeeds seeds = StageSeeds::from_master(seed);
  const bool reduced = options.reduced_features;
  const Dataset base = dataset_from_records(load_features(base_path), reduced);
  const Split split = split_stratified(base, kTrainFraction, seeds.split);

  std::vector<std::unique_ptr<AttackModel>> models;
  for (const auto& spec : options.models) {
    models.push_back(fit(spec, split.train, derive_seed(seeds.fit, spec.name())));
  }
  const std::set<std::string> adaptive(options.adaptive.begin(), options.adaptive.end());

  Json report = {{"seed", seed},
                 {"train_fraction", kTrainFraction},
                 {"features", feature_names(reduced)},
                 {"train_rows", split.train.size()},
                 {"test_rows", split.test.size()}};
  Json models_json = Json::array();
  for (const auto& spec : options.models) {
    models_json.push_back({{"kind", spec.name()}, {"params", spec.params()}});
  }
  report["models"] = models_json;

  std::ofstream summary = open_out(out / "summary.csv");
  summary << "config,model,accuracy,adaptive_accuracy\n";
  Json configs = Json::array();
  for (const auto& name : config_order(results)) {
    const Dataset ds = dataset_from_records(load_features(results / "features" / (name + ".csv")),
                                            reduced);
    if (ds.size() != base.size()) {
      throw Error(ErrorCode::kShape, name + " has " + std::to_string(ds.size()) +
                                         " rows, baseline has " + std::to_string(base.size()));
    }
    const Dataset test = select_rows(ds, split.test.ids);
    Json entry = {{"config", name}};
    Json per_model = Json::array();
    for (std::size_t m = 0; m < models.size(); ++m) {
      const ModelSpec& spec = options.models[m];
      Json r = model_report(*models[m], test);
      std::string adaptive_cell;
      if (adaptive.count(name) != 0) {
        const Dataset anon_train = select_rows(ds, split.train.ids);
        const auto retrained = adaptive_retrain(spec, split.train, anon_train,
                                                derive_seed(seeds.fit, "adaptive:" + spec.name()));
        r["adaptive"] = model_report(*retrained, test);
        adaptive_cell = format_double(r["adaptive"]["accuracy"].get<double>());
      }
      summary << name << "," << spec.name() << "," << format_double(r["accuracy"].get<double>())
              << "," << adaptive_cell << "\n";
      per_model.push_back(std::move(r));
    }
    entry["results"] = per_model;
    configs.push_back(std::move(entry));
  }
  report["configs"] = configs;
  std::ofstream f = open_out(out / "report.json");
  f << report.dump(2) << "\n";
}

std::vector<AccuracyRow> read_summary(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("config,model,accuracy,adaptive_accuracy", 0) != 0) {
    throw Error(ErrorCode::kFormat, "unexpected header in " + path.string());
  }
  std::vector<AccuracyRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv_fields(line);
    if (f.size() != 4) throw Error(ErrorCode::kFormat, "bad row in " + path.string());
    out.push_back({f[0], f[1], to_double(f[2], path), f[3].empty() ? -1.0 : to_double(f[3], path)});
  }
  return out;
}

std::vector<OverheadRow> read_overheads(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<OverheadRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv_fields(line);
    if (f.size() != 4) throw Error(ErrorCode::kFormat, "bad row in " + path.string());
    out.push_back({f[0], to_double(f[1], path), to_double(f[2], path), to_double(f[3], path)});
  }
  return out;
}

std::vector<TimingRow> read_timing(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<TimingRow> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::size_t> counts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv_fields(line);
    if (f.size() != 3) throw Error(ErrorCode::kFormat, "bad row in " + path.string());
    auto [it, fresh] = index.emplace(f[0], out.size());
    if (fresh) {
      out.push_back({f[0], 0.0});
      counts.push_back(0);
    }
    out[it->second].mean_anonymize_ms += to_double(f[2], path);
    ++counts[it->second];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].mean_anonymize_ms /= counts[i];
  return out;
}

namespace {

using AccuracyIndex = std::map<std::pair<std::string, std::string>, AccuracyRow>;

std::string cell(const AccuracyIndex& idx, const std::string& config, const std::string& model,
                 bool adaptive = false) {
  auto it = idx.find({config, model});
  if (it == idx.end()) return "-";
  const double v = adaptive ? it->second.adaptive_accuracy : it->second.accuracy;
  return v < 0 ? "-" : pct(v);
}

void render_accuracy(std::ostream& out, const std::vector<AccuracyRow>& rows) {
  AccuracyIndex idx;
  std::vector<std::string> models;
  std::vector<std::string> configs;
  for (const auto& r : rows) {
    idx[{r.config, r.model}] = r;
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    if (std::find(configs.begin(), configs.end(), r.config) == configs.end()) {
      configs.push_back(r.config);
    }
  }
  auto has = [&](const std::string& c) {
    return std::find(configs.begin(), configs.end(), c) != configs.end();
  };

  {
    std::vector<std::string> header{"configuration"};
    header.insert(header.end(), models.begin(), models.end());
    TextTable t(header);
    for (const auto& c : configs) {
      std::vector<std::string> row{c};
      for (const auto& m : models) row.push_back(cell(idx, c, m));
      t.add(row);
    }
    t.render(out, "Attack accuracy (%) by configuration");
  }

  const std::vector<std::pair<std::string, std::string>> masks = {
      {"in", "input padding"}, {"out", "output padding"}, {"both", "input+output padding"},
      {"time", "time"},        {"all", "all features"}};
  for (const auto& m : models) {
    std::vector<std::string> header{"level"};
    for (const auto& [key, label] : masks) header.push_back(label);
    TextTable t(header);
    bool any = false;
    if (has(kBaseline)) {
      std::vector<std::string> row{"0"};
      for (std::size_t i = 0; i < masks.size(); ++i) row.push_back(cell(idx, kBaseline, m));
      t.add(row);
    }
    for (int level = kMinLevel; level <= kMaxLevel; ++level) {
      std::vector<std::string> row{std::to_string(level)};
      for (const auto& [key, label] : masks) {
        const std::string c = "remodel_L" + std::to_string(level) + "_" + key;
        any = any || has(c);
        row.push_back(cell(idx, c, m));
      }
      t.add(row);
    }
    if (any) t.render(out, "Impact of anonymizing different features (" + m + ", accuracy %)");
  }

  for (const char* v : {"seq", "par"}) {
    std::vector<std::string> header{"batch size"};
    header.insert(header.end(), models.begin(), models.end());
    TextTable t(header);
    bool any = false;
    for (std::size_t b = 2; b <= 16; ++b) {
      const std::string c = std::string("mix_") + v + "_B" + std::to_string(b);
      if (!has(c)) continue;
      any = true;
      std::vector<std::string> row{std::to_string(b)};
      for (const auto& m : models) row.push_back(cell(idx, c, m));
      t.add(row);
    }
    if (any) {
      t.render(out, std::string("Mixing mode accuracy (%), ") +
                        (v[0] == 's' ? "sequential" : "parallel"));
    }
  }

  for (const auto& m : models) {
    for (const char* v : {"seq", "par"}) {
      std::vector<std::string> header{"level"};
      for (std::size_t b = 2; b <= 5; ++b) header.push_back("B=" + std::to_string(b));
      TextTable t(header);
      bool any = false;
      for (int level = kMinLevel; level <= kMaxLevel; ++level) {
        std::vector<std::string> row{std::to_string(level)};
        for (std::size_t b = 2; b <= 5; ++b) {
          const std::string c = std::string("hybrid_") + v + "_L" + std::to_string(level) + "_B" +
                                std::to_string(b);
          any = any || has(c);
          row.push_back(cell(idx, c, m));
        }
        t.add(row);
      }
      if (any) {
        t.render(out, "Hybrid mode accuracy (" + m + ", " +
                          (v[0] == 's' ? "sequential" : "parallel") + ", %)");
      }
    }
  }

  {
    std::vector<std::string> header{"configuration"};
    for (const auto& m : models) {
      header.push_back(m);
      header.push_back(m + " adaptive");
    }
    TextTable t(header);
    bool any = false;
    for (const auto& c : configs) {
      bool adaptive = false;
      for (const auto& m : models) adaptive = adaptive || idx[{c, m}].adaptive_accuracy >= 0;
      if (!adaptive) continue;
      any = true;
      std::vector<std::string> row{c};
      for (const auto& m : models) {
        row.push_back(cell(idx, c, m));
        row.push_back(cell(idx, c, m, true));
      }
      t.add(row);
    }
    if (any) t.render(out, "Adaptive attacker accuracy (%)");
  }
}

void render_overheads(std::ostream& out, const std::vector<OverheadRow>& rows) {
  TextTable t({"configuration", "time", "cpu", "mem"});
  for (const auto& r : rows) {
    t.add({r.config, fmt("%.3f", r.time_ratio), fmt("%.3f", r.cpu_ratio),
           fmt("%.3f", r.mem_ratio)});
  }
  t.render(out, "Normalized overheads (anonymized / baseline, mean per graph)");
}

}  // namespace

void cmd_report(const fs::path& dir) {
  make_dirs(dir);
  std::ostringstream text;
  text << "Shroud experiment report\n========================\n\n";
  if (fs::exists(dir / "summary.csv")) render_accuracy(text, read_summary(dir / "summary.csv"));
  if (fs::exists(dir / "overhead.csv")) render_overheads(text, read_overheads(dir / "overhead.csv"));
  {
    std::ofstream f = open_out(dir / "report.txt");
    f << text.str();
  }

  std::ostringstream timing;
  timing << "Shroud anonymization timing (wall clock)\n"
            "========================================\n\n";
  if (fs::exists(dir / "timing.csv")) {
    TextTable t({"configuration", "mean ms per graph"});
    for (const auto& r : read_timing(dir / "timing.csv")) {
      t.add({r.config, fmt("%.6f", r.mean_anonymize_ms)});
    }
    t.render(timing, "Required time to anonymize");
  }
  std::ofstream f = open_out(dir / "timing_report.txt");
  f << timing.str();
}

}  // namespace shroud

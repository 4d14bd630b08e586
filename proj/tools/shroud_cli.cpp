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

#include <atomic>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "shroud/error.hpp"
#include "shroud/experiments.hpp"
#include "shroud/service.hpp"

namespace fs = std::filesystem;

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shroud: computation-graph anonymization experiments"};
  app.require_subcommand(1);

  std::uint64_t seed = 20260101;
  std::string out = "out";
  std::string clock = "sim";
  std::string cost_model;
  app.add_option("--seed", seed, "master seed")->capture_default_str();
  app.add_option("--out", out, "output root directory")->capture_default_str();
  app.add_option("--clock", clock, "time source")
      ->check(CLI::IsMember({"sim", "wall"}))
      ->capture_default_str();
  app.add_option("--cost-model", cost_model, "cost model JSON (default: built-in)");

  auto* gen = app.add_subcommand("gen", "generate the synthetic dataset into <out>/dataset");
  std::size_t classes = shroud::default_class_suite().size();
  std::size_t samples = 100;
  gen->add_option("--classes", classes, "number of built-in classes")->capture_default_str();
  gen->add_option("--samples", samples, "samples per class")->capture_default_str();

  auto* run = app.add_subcommand("run", "run the sweep, writing <out>/results");
  std::string dataset;
  std::string sweep_file;
  run->add_option("--dataset", dataset, "dataset directory (default <out>/dataset)");
  run->add_option("--sweep", sweep_file, "key=value sweep file");

  auto* attack = app.add_subcommand("attack", "train attack models and score every config");
  std::string models = "knn,dtree,mlp";
  std::string model_config;
  bool reduced = false;
  attack->add_option("--models", models, "comma-separated model kinds")->capture_default_str();
  attack->add_option("--model-config", model_config, "key=value hyperparameter file");
  attack->add_flag("--reduced-features", reduced, "drop I/O features");

  app.add_subcommand("report", "render <out>/results into text tables");

  auto* serve = app.add_subcommand("serve", "run the anonymizing engine service");
  std::string bind;
  std::size_t max_frame = 0;
  int batch_timeout_ms = -1;
  std::string service_config;
  serve->add_option("--bind", bind, "host:port to listen on (default 127.0.0.1:7070)");
  serve->add_option("--max-frame", max_frame, "largest accepted frame in bytes (default 64 MiB)");
  serve->add_option("--batch-timeout-ms", batch_timeout_ms,
                    "wait before running a partial mixing batch (default 100)");
  serve->add_option("--config", service_config, "key=value defaults file");

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path root(out);
    shroud::Clock clk = clock == "sim" ? shroud::Clock::simulated() : shroud::Clock::wall();
    if (!cost_model.empty()) clk.costs = shroud::load_cost_model(cost_model);
    if (gen->parsed()) {
      shroud::cmd_gen(classes, samples, seed, root / "dataset");
    } else if (run->parsed()) {
      shroud::Sweep sweep;
      if (!sweep_file.empty()) sweep = shroud::Sweep::from_kv(shroud::read_kv_file(sweep_file));
      shroud::cmd_run(dataset.empty() ? root / "dataset" : fs::path(dataset), sweep, clk, seed,
                      root / "results");
    } else if (attack->parsed()) {
      shroud::AttackOptions options;
      options.reduced_features = reduced;
      options.models = shroud::parse_model_list(
          models, model_config.empty() ? shroud::KvConfig{} : shroud::read_kv_file(model_config));
      shroud::cmd_attack(root / "results", options, seed, root / "results");
    } else if (serve->parsed()) {
      shroud::ServiceConfig cfg;
      if (!service_config.empty()) {
        cfg = shroud::ServiceConfig::from_kv(shroud::read_kv_file(service_config));
      }
      if (!bind.empty()) cfg.bind = bind;
      if (max_frame > 0) cfg.max_frame = max_frame;
      if (batch_timeout_ms >= 0) cfg.batch_timeout_ms = batch_timeout_ms;
      if (app.get_option("--clock")->count() > 0) {
        cfg.clock = clock == "sim" ? shroud::ClockMode::kSimulated : shroud::ClockMode::kWallClock;
      }
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      shroud::EngineServer server(cfg);
      server.start();
      std::cerr << "shroud: serving on port " << server.port() << "\n";
      while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      server.stop();
    } else {
      shroud::cmd_report(root / "results");
    }
  } catch (const shroud::Error& e) {
    std::cerr << "shroud: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

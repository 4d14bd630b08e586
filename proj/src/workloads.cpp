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

#include "shroud/workloads.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include "json.hpp"
#include "shroud/error.hpp"
#include "shroud/rng.hpp"

namespace shroud {

namespace fs = std::filesystem;

namespace {

void validate_suite(std::span<const WorkloadClass> spec) {
  if (spec.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset spec is empty");
  std::set<std::string> names;
  for (const auto& c : spec) {
    if (c.name.empty() || !names.insert(c.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "class names must be non-empty and unique");
    }
    if (c.input_min < 1 || c.input_min > c.input_max) {
      throw Error(ErrorCode::kInvalidArgument, "class " + c.name + " has a bad input range");
    }
    if (c.steps.empty()) throw Error(ErrorCode::kInvalidArgument, "class " + c.name + " is empty");
  }
}

// Byte runs of random length so Compress sees realistic, varying ratios.
Bytes random_content(Rng& rng, std::size_t len) {
  Bytes out;
  out.reserve(len);
  while (out.size() < len) {
    const auto value = static_cast<std::uint8_t>(rng.next());
    const auto run = std::min<std::size_t>(rng.uniform_int(1, 6), len - out.size());
    out.insert(out.end(), run, value);
  }
  return out;
}

std::string index_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06zu", i);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

ComputationGraph WorkloadClass::build() const {
  ComputationGraph g = ComputationGraph::create(name, delay_class);
  for (const auto& step : steps) g.connect_nodes(step.kind, step.deps, step.params);
  return g;
}

std::vector<Sample> generate_dataset(std::span<const WorkloadClass> spec,
                                     std::size_t samples_per_class, std::uint64_t seed) {
  validate_suite(spec);
  if (samples_per_class < 1) {
    throw Error(ErrorCode::kInvalidArgument, "samples_per_class must be >= 1");
  }
  std::vector<Sample> out;
  out.reserve(spec.size() * samples_per_class);
  for (std::size_t c = 0; c < spec.size(); ++c) {
    const WorkloadClass& cls = spec[c];
    const ComputationGraph topology = cls.build();
    const std::size_t sources = static_cast<std::size_t>(
        std::count_if(cls.steps.begin(), cls.steps.end(),
                      [](const TemplateStep& s) { return s.deps.empty(); }));
    Rng rng(derive_seed(seed, c));
    for (std::size_t s = 0; s < samples_per_class; ++s) {
      Sample sample{topology, {}};
      for (std::size_t k = 0; k < sources; ++k) {
        const auto len = static_cast<std::size_t>(rng.uniform_int(cls.input_min, cls.input_max));
        sample.inputs.emplace_back(random_content(rng, len));
      }
      out.push_back(std::move(sample));
    }
  }
  return out;
}

SuiteStats suite_stats(std::span<const WorkloadClass> suite) {
  SuiteStats st;
  if (suite.empty()) return st;
  double nodes = 0, sq = 0, edges = 0;
  for (const auto& c : suite) {
    const auto n = static_cast<double>(c.steps.size());
    nodes += n;
    sq += n * n;
    for (const auto& s : c.steps) edges += static_cast<double>(s.deps.size());
  }
  const auto k = static_cast<double>(suite.size());
  st.mean_nodes = nodes / k;
  st.stddev_nodes = std::sqrt(std::max(0.0, sq / k - st.mean_nodes * st.mean_nodes));
  st.mean_degree = 2.0 * edges / nodes;
  return st;
}

void write_dataset(const fs::path& dir, std::span<const Sample> samples) {
  std::error_code ec;
  fs::create_directories(dir / "graphs", ec);
  fs::create_directories(dir / "payloads", ec);
  if (ec || !fs::is_directory(dir / "payloads")) {
    throw Error(ErrorCode::kIo, "cannot create dataset directory " + dir.string());
  }
  nlohmann::json manifest = nlohmann::json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    const std::string graph_file = "graphs/" + index_name(i) + ".json";
    write_file(dir / graph_file, to_json(s.graph).dump(1) + "\n");
    nlohmann::json inputs = nlohmann::json::array();
    for (std::size_t k = 0; k < s.inputs.size(); ++k) {
      const std::string file = "payloads/" + index_name(i) + "_" + std::to_string(k) + ".bin";
      const auto& bytes = s.inputs[k].physical();
      write_file(dir / file, std::string(bytes.begin(), bytes.end()));
      write_file(dir / (file + ".len"), std::to_string(s.inputs[k].logical_len()) + "\n");
      inputs.push_back({{"file", file}, {"logical_len", s.inputs[k].logical_len()}});
    }
    manifest.push_back(
        {{"class_label", s.graph.class_label()}, {"graph", graph_file}, {"inputs", inputs}});
  }
  write_file(dir / "manifest.json", manifest.dump(1) + "\n");
}

std::vector<Sample> read_dataset(const fs::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("manifest: ") + e.what());
  }
  std::vector<Sample> out;
  for (const auto& entry : manifest) {
    Sample s{graph_from_json(nlohmann::json::parse(read_file(dir / entry.at("graph").get<std::string>()))),
             {}};
    if (s.graph.class_label() != entry.at("class_label").get<std::string>()) {
      throw Error(ErrorCode::kFormat, "manifest label disagrees with graph file");
    }
    for (const auto& in : entry.at("inputs")) {
      const std::string file = in.at("file").get<std::string>();
      const std::string raw = read_file(dir / file);
      const auto logical = std::stoull(read_file(dir / (file + ".len")));
      s.inputs.emplace_back(Bytes(raw.begin(), raw.end()), logical);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace shroud

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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shroud/executor.hpp"

namespace shroud {

using Row = std::vector<double>;

// Per-feature z-score; zero spread maps to a unit divisor.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalization fit(std::span<const Row> rows);
  Row apply(std::span<const double> row) const;
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<Row> rows;
  std::vector<std::string> labels;
  std::vector<std::size_t> ids;  // originating sample index per row
  // Fit on a training split; models trained on this dataset carry it.
  std::optional<Normalization> normalization;

  std::size_t size() const { return rows.size(); }
  std::size_t dims() const { return feature_names.size(); }
  // shape-error unless rows, labels and ids agree and every row has dims().
  void validate() const;
};

// num_in, num_out, in_bytes, out_bytes, time_ms, cpu_ms, mem_bytes, cpu_util.
// The reduced set keeps only the last four (no I/O observations).
std::vector<std::string> feature_names(bool reduced = false);
Row feature_vector(const FeatureRecord& r, bool reduced = false);
Dataset dataset_from_records(std::span<const FeatureRecord> records, bool reduced = false);

Dataset select_rows(const Dataset& ds, std::span<const std::size_t> ids);
Dataset concat(const Dataset& a, const Dataset& b);

struct Split {
  Dataset train;
  Dataset test;
};

// Per-class proportional split after a seeded shuffle; normalization fit on
// train and attached to both halves. split-error for a fraction outside
// (0,1) or a class with fewer than two rows.
Split split_stratified(const Dataset& ds, double train_fraction, std::uint64_t seed);

enum class ModelKind : std::uint8_t { kKnn, kDecisionTree, kMlp };

struct ModelSpec {
  ModelKind kind = ModelKind::kKnn;
  int k = 5;
  int max_depth = 0;  // 0 = unlimited
  int min_split = 2;
  int hidden_units = 32;
  int epochs = 300;
  double learning_rate = 0.05;

  static ModelSpec knn(int k = 5) { return {ModelKind::kKnn, k}; }
  static ModelSpec decision_tree() { return {ModelKind::kDecisionTree}; }
  static ModelSpec mlp() { return {ModelKind::kMlp}; }
  static ModelSpec parse(std::string_view name);

  std::string name() const;  // "knn", "dtree", "mlp"
  nlohmann::json params() const;
};

class AttackModel {
 public:
  virtual ~AttackModel() = default;

  // Normalizes `row` with the training normalization, then predicts.
  std::string predict(std::span<const double> row) const;
  const ModelSpec& spec() const { return spec_; }
  std::size_t dims() const { return dims_; }

 protected:
  AttackModel(ModelSpec spec, std::optional<Normalization> norm, std::size_t dims)
      : spec_(spec), norm_(std::move(norm)), dims_(dims) {}
  virtual std::string predict_normalized(std::span<const double> row) const = 0;

 private:
  ModelSpec spec_;
  std::optional<Normalization> norm_;
  std::size_t dims_;
};

class KnnModel final : public AttackModel {
 public:
  KnnModel(ModelSpec spec, const Dataset& train);

 protected:
  std::string predict_normalized(std::span<const double> row) const override;

 private:
  std::vector<Row> rows_;
  std::vector<std::string> labels_;
};

class DecisionTreeModel final : public AttackModel {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;     // x[feature] <= threshold
    int right = -1;
    std::string label;
  };

  DecisionTreeModel(ModelSpec spec, const Dataset& train);
  const std::vector<Node>& nodes() const { return nodes_; }
  // Index of the leaf a normalized row lands in.
  int leaf_of(std::span<const double> normalized_row) const;

 protected:
  std::string predict_normalized(std::span<const double> row) const override;

 private:
  int build(std::vector<std::size_t> idx, int depth, const std::vector<Row>& x,
            const std::vector<int>& y);

  std::vector<std::string> classes_;
  std::vector<Node> nodes_;
};

// One tanh hidden layer, softmax output, mean cross-entropy.
class MlpModel final : public AttackModel {
 public:
  MlpModel(ModelSpec spec, const Dataset& train, std::uint64_t seed);

  // Flat parameter layout: W1 (hidden x dims), b1, W2 (classes x hidden), b2.
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  const std::vector<std::string>& classes() const { return classes_; }

  double loss(std::span<const Row> x, std::span<const int> y) const;
  std::vector<double> gradient(std::span<const Row> x, std::span<const int> y) const;

  // Unfitted network with seeded initial weights; for gradient checks.
  static MlpModel untrained(ModelSpec spec, std::size_t dims, std::vector<std::string> classes,
                            std::uint64_t seed);

 protected:
  std::string predict_normalized(std::span<const double> row) const override;

 private:
  MlpModel(ModelSpec spec, std::size_t dims, std::vector<std::string> classes, std::uint64_t seed,
           std::optional<Normalization> norm);
  void forward(std::span<const double> x, std::vector<double>& hidden,
               std::vector<double>& prob) const;

  std::size_t dims_;
  std::size_t hidden_;
  std::vector<std::string> classes_;
  std::vector<double> params_;
};

std::unique_ptr<AttackModel> fit(const ModelSpec& spec, const Dataset& train, std::uint64_t seed);

// Fraction of correct predictions. shape-error on an empty test set or a
// feature count that differs from training.
double evaluate(const AttackModel& model, const Dataset& test);

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::uint64_t>> counts;  // [truth][predicted]
};
ConfusionMatrix confusion_matrix(const AttackModel& model, const Dataset& test);

// Fits on original + anonymized rows, refitting normalization on the union
// when the original carries one.
std::unique_ptr<AttackModel> adaptive_retrain(const ModelSpec& spec, const Dataset& original,
                                              const Dataset& anonymized, std::uint64_t seed);

// {kind, params, accuracy, confusion_matrix}
nlohmann::json model_report(const AttackModel& model, const Dataset& test);

}  // namespace shroud

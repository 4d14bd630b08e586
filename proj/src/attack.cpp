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

#include "shroud/attack.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "shroud/error.hpp"
#include "shroud/rng.hpp"

namespace shroud {

namespace {

std::vector<std::string> sorted_classes(const std::vector<std::string>& labels) {
  std::vector<std::string> out = labels;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Row> normalized_rows(const Dataset& ds) {
  if (!ds.normalization) return ds.rows;
  std::vector<Row> out;
  out.reserve(ds.rows.size());
  for (const Row& r : ds.rows) out.push_back(ds.normalization->apply(r));
  return out;
}

// Majority label; ties go to the lexicographically smallest (classes sorted).
std::string majority(const std::vector<std::size_t>& counts,
                     const std::vector<std::string>& classes) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return classes[best];
}

double gini(const std::vector<std::size_t>& counts, std::size_t n) {
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    sum += p * p;
  }
  return 1.0 - sum;
}

}  // namespace

Normalization Normalization::fit(std::span<const Row> rows) {
  Normalization n;
  if (rows.empty()) return n;
  const std::size_t d = rows.front().size();
  n.mean.assign(d, 0.0);
  n.stddev.assign(d, 0.0);
  for (const Row& r : rows) {
    for (std::size_t j = 0; j < d; ++j) n.mean[j] += r[j];
  }
  for (double& m : n.mean) m /= static_cast<double>(rows.size());
  for (const Row& r : rows) {
    for (std::size_t j = 0; j < d; ++j) n.stddev[j] += (r[j] - n.mean[j]) * (r[j] - n.mean[j]);
  }
  for (double& s : n.stddev) {
    s = std::sqrt(s / static_cast<double>(rows.size()));
    if (s < 1e-12) s = 1.0;
  }
  return n;
}

Row Normalization::apply(std::span<const double> row) const {
  Row out(row.begin(), row.end());
  for (std::size_t j = 0; j < out.size() && j < mean.size(); ++j) {
    out[j] = (out[j] - mean[j]) / stddev[j];
  }
  return out;
}

void Dataset::validate() const {
  if (labels.size() != rows.size() || ids.size() != rows.size()) {
    throw Error(ErrorCode::kShape, "dataset rows, labels and ids disagree in length");
  }
  for (const Row& r : rows) {
    if (r.size() != dims()) throw Error(ErrorCode::kShape, "row width differs from feature count");
  }
}

std::vector<std::string> feature_names(bool reduced) {
  if (reduced) return {"time_ms", "cpu_ms", "mem_bytes", "cpu_util"};
  return {"num_in", "num_out", "in_bytes", "out_bytes", "time_ms", "cpu_ms", "mem_bytes", "cpu_util"};
}

Row feature_vector(const FeatureRecord& r, bool reduced) {
  const double util = r.completion_time_ms > 0 ? r.cpu_busy_ms / r.completion_time_ms : 0.0;
  if (reduced) return {r.completion_time_ms, r.cpu_busy_ms, r.peak_memory_bytes, util};
  return {static_cast<double>(r.num_inputs),        static_cast<double>(r.num_outputs),
          static_cast<double>(r.total_input_bytes), static_cast<double>(r.total_output_bytes),
          r.completion_time_ms,                     r.cpu_busy_ms,
          r.peak_memory_bytes,                      util};
}

Dataset dataset_from_records(std::span<const FeatureRecord> records, bool reduced) {
  Dataset ds;
  ds.feature_names = feature_names(reduced);
  for (std::size_t i = 0; i < records.size(); ++i) {
    ds.rows.push_back(feature_vector(records[i], reduced));
    ds.labels.push_back(records[i].class_label);
    ds.ids.push_back(i);
  }
  return ds;
}

Dataset select_rows(const Dataset& ds, std::span<const std::size_t> ids) {
  std::map<std::size_t, std::size_t> where;
  for (std::size_t i = 0; i < ds.ids.size(); ++i) where[ds.ids[i]] = i;
  Dataset out;
  out.feature_names = ds.feature_names;
  out.normalization = ds.normalization;
  for (std::size_t id : ids) {
    auto it = where.find(id);
    if (it == where.end()) throw Error(ErrorCode::kShape, "row id " + std::to_string(id) + " missing");
    out.rows.push_back(ds.rows[it->second]);
    out.labels.push_back(ds.labels[it->second]);
    out.ids.push_back(id);
  }
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (!b.rows.empty() && a.feature_names != b.feature_names) {
    throw Error(ErrorCode::kShape, "datasets have different feature orders");
  }
  Dataset out = a;
  out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  return out;
}

Split split_stratified(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  ds.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kSplit, "train fraction must lie in (0, 1)");
  }
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> train_rows, test_rows;
  for (auto& [label, rows] : by_class) {
    if (rows.size() < 2) throw Error(ErrorCode::kSplit, "class '" + label + "' has a single row");
    rng.shuffle(rows.begin(), rows.end());
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * rows.size() + 0.5));
    n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + n_train);
    test_rows.insert(test_rows.end(), rows.begin() + n_train, rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  auto take = [&](const std::vector<std::size_t>& rows) {
    Dataset out;
    out.feature_names = ds.feature_names;
    for (std::size_t r : rows) {
      out.rows.push_back(ds.rows[r]);
      out.labels.push_back(ds.labels[r]);
      out.ids.push_back(ds.ids[r]);
    }
    return out;
  };
  Split s{take(train_rows), take(test_rows)};
  s.train.normalization = Normalization::fit(s.train.rows);
  s.test.normalization = s.train.normalization;
  return s;
}

ModelSpec ModelSpec::parse(std::string_view name) {
  if (name == "knn") return knn();
  if (name == "dtree") return decision_tree();
  if (name == "mlp") return mlp();
  throw Error(ErrorCode::kConfig, "unknown model kind '" + std::string(name) + "'");
}

std::string ModelSpec::name() const {
  switch (kind) {
    case ModelKind::kKnn: return "knn";
    case ModelKind::kDecisionTree: return "dtree";
    case ModelKind::kMlp: return "mlp";
  }
  return "?";
}

nlohmann::json ModelSpec::params() const {
  switch (kind) {
    case ModelKind::kKnn: return {{"k", k}};
    case ModelKind::kDecisionTree: return {{"max_depth", max_depth}, {"min_split", min_split}};
    case ModelKind::kMlp:
      return {{"hidden_units", hidden_units}, {"epochs", epochs}, {"learning_rate", learning_rate}};
  }
  return {};
}

std::string AttackModel::predict(std::span<const double> row) const {
  if (row.size() != dims_) throw Error(ErrorCode::kShape, "feature count differs from training");
  if (!norm_) return predict_normalized(row);
  const Row z = norm_->apply(row);
  return predict_normalized(z);
}

// ---- kNN -------------------------------------------------------------------

KnnModel::KnnModel(ModelSpec spec, const Dataset& train)
    : AttackModel(spec, train.normalization, train.dims()),
      rows_(normalized_rows(train)),
      labels_(train.labels) {
  if (spec.k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
}

std::string KnnModel::predict_normalized(std::span<const double> row) const {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) d += (rows_[i][j] - row[j]) * (rows_[i][j] - row[j]);
    dist.emplace_back(d, i);
  }
  const std::size_t k = std::min<std::size_t>(spec().k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::map<std::string, std::size_t> votes;
  for (std::size_t i = 0; i < k; ++i) ++votes[labels_[dist[i].second]];
  // std::map iterates labels in order, so the first maximum is the smallest.
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

// ---- decision tree ------------------------------------------------------------

DecisionTreeModel::DecisionTreeModel(ModelSpec spec, const Dataset& train)
    : AttackModel(spec, train.normalization, train.dims()), classes_(sorted_classes(train.labels)) {
  if (train.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  const std::vector<Row> x = normalized_rows(train);
  std::vector<int> y;
  for (const auto& l : train.labels) {
    y.push_back(static_cast<int>(std::lower_bound(classes_.begin(), classes_.end(), l) - classes_.begin()));
  }
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  build(std::move(idx), 0, x, y);
}

int DecisionTreeModel::build(std::vector<std::size_t> idx, int depth, const std::vector<Row>& x,
                             const std::vector<int>& y) {
  const int me = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  std::vector<std::size_t> counts(classes_.size(), 0);
  for (std::size_t i : idx) ++counts[y[i]];
  nodes_[me].label = majority(counts, classes_);

  const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
  const auto min_split = static_cast<std::size_t>(std::max(2, spec().min_split));
  if (pure || idx.size() < min_split || (spec().max_depth > 0 && depth >= spec().max_depth)) {
    return me;
  }

  const std::size_t n = idx.size();
  double best_impurity = INFINITY;
  int best_feature = -1;
  double best_threshold = 0.0;
  std::vector<std::size_t> order = idx;
  for (std::size_t f = 0; f < x.front().size(); ++f) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x[a][f] != x[b][f] ? x[a][f] < x[b][f] : a < b;
    });
    std::vector<std::size_t> left(classes_.size(), 0);
    std::vector<std::size_t> right = counts;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const int c = y[order[i]];
      ++left[c];
      --right[c];
      const double lo = x[order[i]][f];
      const double hi = x[order[i + 1]][f];
      if (lo == hi) continue;
      const std::size_t nl = i + 1;
      const std::size_t nr = n - nl;
      const double impurity = (static_cast<double>(nl) * gini(left, nl) +
                               static_cast<double>(nr) * gini(right, nr)) /
                              static_cast<double>(n);
      if (impurity < best_impurity) {
        best_impurity = impurity;
        best_feature = static_cast<int>(f);
        best_threshold = lo + (hi - lo) / 2.0;
      }
    }
  }
  if (best_feature < 0) return me;  // every feature constant: conflicting duplicates

  std::vector<std::size_t> left_idx, right_idx;
  for (std::size_t i : idx) {
    (x[i][best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);
  }
  nodes_[me].feature = best_feature;
  nodes_[me].threshold = best_threshold;
  const int l = build(std::move(left_idx), depth + 1, x, y);
  nodes_[me].left = l;
  const int r = build(std::move(right_idx), depth + 1, x, y);
  nodes_[me].right = r;
  return me;
}

int DecisionTreeModel::leaf_of(std::span<const double> row) const {
  int at = 0;
  while (nodes_[at].feature >= 0) {
    at = row[nodes_[at].feature] <= nodes_[at].threshold ? nodes_[at].left : nodes_[at].right;
  }
  return at;
}

std::string DecisionTreeModel::predict_normalized(std::span<const double> row) const {
  return nodes_[leaf_of(row)].label;
}

// ---- MLP -------------------------------------------------------------------

MlpModel::MlpModel(ModelSpec spec, std::size_t dims, std::vector<std::string> classes,
                   std::uint64_t seed, std::optional<Normalization> norm)
    : AttackModel(spec, std::move(norm), dims),
      dims_(dims),
      hidden_(static_cast<std::size_t>(spec.hidden_units)),
      classes_(std::move(classes)) {
  const std::size_t c = classes_.size();
  params_.resize(hidden_ * dims_ + hidden_ + c * hidden_ + c);
  Rng rng(seed);
  for (double& p : params_) p = rng.uniform(-0.1, 0.1);
}

MlpModel MlpModel::untrained(ModelSpec spec, std::size_t dims, std::vector<std::string> classes,
                             std::uint64_t seed) {
  return MlpModel(spec, dims, std::move(classes), seed, std::nullopt);
}

MlpModel::MlpModel(ModelSpec spec, const Dataset& train, std::uint64_t seed)
    : MlpModel(spec, train.dims(), sorted_classes(train.labels), seed, train.normalization) {
  const std::vector<Row> x = normalized_rows(train);
  std::vector<int> y;
  for (const auto& l : train.labels) {
    y.push_back(static_cast<int>(std::lower_bound(classes_.begin(), classes_.end(), l) - classes_.begin()));
  }
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    const std::vector<double> g = gradient(x, y);
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i] -= spec.learning_rate * g[i];
  }
}

void MlpModel::forward(std::span<const double> x, std::vector<double>& hidden,
                       std::vector<double>& prob) const {
  const std::size_t c = classes_.size();
  const double* w1 = params_.data();
  const double* b1 = w1 + hidden_ * dims_;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + c * hidden_;
  hidden.assign(hidden_, 0.0);
  for (std::size_t h = 0; h < hidden_; ++h) {
    double s = b1[h];
    for (std::size_t j = 0; j < dims_; ++j) s += w1[h * dims_ + j] * x[j];
    hidden[h] = std::tanh(s);
  }
  prob.assign(c, 0.0);
  double mx = -INFINITY;
  for (std::size_t k = 0; k < c; ++k) {
    double s = b2[k];
    for (std::size_t h = 0; h < hidden_; ++h) s += w2[k * hidden_ + h] * hidden[h];
    prob[k] = s;
    mx = std::max(mx, s);
  }
  double z = 0.0;
  for (double& p : prob) {
    p = std::exp(p - mx);
    z += p;
  }
  for (double& p : prob) p /= z;
}

double MlpModel::loss(std::span<const Row> x, std::span<const int> y) const {
  std::vector<double> hidden, prob;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    forward(x[i], hidden, prob);
    total -= std::log(std::max(prob[y[i]], 1e-300));
  }
  return total / static_cast<double>(x.size());
}

std::vector<double> MlpModel::gradient(std::span<const Row> x, std::span<const int> y) const {
  const std::size_t c = classes_.size();
  std::vector<double> grad(params_.size(), 0.0);
  double* gw1 = grad.data();
  double* gb1 = gw1 + hidden_ * dims_;
  double* gw2 = gb1 + hidden_;
  double* gb2 = gw2 + c * hidden_;
  const double* w2 = params_.data() + hidden_ * dims_ + hidden_;
  std::vector<double> hidden, prob, dh(hidden_);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    forward(x[i], hidden, prob);
    prob[y[i]] -= 1.0;  // dL/dlogits
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      const double dz = prob[k] * scale;
      gb2[k] += dz;
      for (std::size_t h = 0; h < hidden_; ++h) {
        gw2[k * hidden_ + h] += dz * hidden[h];
        dh[h] += dz * w2[k * hidden_ + h];
      }
    }
    for (std::size_t h = 0; h < hidden_; ++h) {
      const double da = dh[h] * (1.0 - hidden[h] * hidden[h]);
      gb1[h] += da;
      for (std::size_t j = 0; j < dims_; ++j) gw1[h * dims_ + j] += da * x[i][j];
    }
  }
  return grad;
}

std::string MlpModel::predict_normalized(std::span<const double> row) const {
  std::vector<double> hidden, prob;
  forward(row, hidden, prob);
  return classes_[std::max_element(prob.begin(), prob.end()) - prob.begin()];
}

// ---- harness ---------------------------------------------------------------

std::unique_ptr<AttackModel> fit(const ModelSpec& spec, const Dataset& train, std::uint64_t seed) {
  train.validate();
  if (train.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  switch (spec.kind) {
    case ModelKind::kKnn: return std::make_unique<KnnModel>(spec, train);
    case ModelKind::kDecisionTree: return std::make_unique<DecisionTreeModel>(spec, train);
    case ModelKind::kMlp: return std::make_unique<MlpModel>(spec, train, seed);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind");
}

double evaluate(const AttackModel& model, const Dataset& test) {
  test.validate();
  if (test.size() == 0) throw Error(ErrorCode::kShape, "empty test set");
  if (test.dims() != model.dims()) throw Error(ErrorCode::kShape, "feature count differs from training");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (model.predict(test.rows[i]) == test.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

ConfusionMatrix confusion_matrix(const AttackModel& model, const Dataset& test) {
  test.validate();
  std::vector<std::string> predicted;
  for (const Row& r : test.rows) predicted.push_back(model.predict(r));
  std::vector<std::string> all = test.labels;
  all.insert(all.end(), predicted.begin(), predicted.end());
  ConfusionMatrix cm;
  cm.labels = sorted_classes(all);
  cm.counts.assign(cm.labels.size(), std::vector<std::uint64_t>(cm.labels.size(), 0));
  auto pos = [&](const std::string& l) {
    return static_cast<std::size_t>(std::lower_bound(cm.labels.begin(), cm.labels.end(), l) - cm.labels.begin());
  };
  for (std::size_t i = 0; i < test.size(); ++i) ++cm.counts[pos(test.labels[i])][pos(predicted[i])];
  return cm;
}

std::unique_ptr<AttackModel> adaptive_retrain(const ModelSpec& spec, const Dataset& original,
                                              const Dataset& anonymized, std::uint64_t seed) {
  Dataset joint = concat(original, anonymized);
  if (original.normalization) joint.normalization = Normalization::fit(joint.rows);
  return fit(spec, joint, seed);
}

nlohmann::json model_report(const AttackModel& model, const Dataset& test) {
  const ConfusionMatrix cm = confusion_matrix(model, test);
  return {{"kind", model.spec().name()},
          {"params", model.spec().params()},
          {"accuracy", evaluate(model, test)},
          {"confusion_matrix", {{"labels", cm.labels}, {"counts", cm.counts}}}};
}

}  // namespace shroud

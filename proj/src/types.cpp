// Copyright 2026 The oodbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "oodbench/types.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "oodbench/error.hpp"

namespace oodbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid input";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kFit: return "fit error";
    case ErrorCode::kNumerical: return "numerical error";
    case ErrorCode::kDomain: return "domain error";
    case ErrorCode::kIncompleteCondition: return "incomplete condition";
    case ErrorCode::kLoad: return "load error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kIo: return "i/o error";
  }
  return "error";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("matrix data has {} values, expected {}x{}", data_.size(),
                            rows_, cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged matrix literal");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

std::string_view to_string(DetectorId id) {
  switch (id) {
    case DetectorId::kMaxSoftmax: return "max-softmax";
    case DetectorId::kOdin: return "odin";
    case DetectorId::kMahalanobis: return "md";
    case DetectorId::kEntropy: return "entropy";
    case DetectorId::kMargin: return "margin";
    case DetectorId::kMcDropout: return "mc-dropout";
    case DetectorId::kMutualInformation: return "mi";
  }
  return "?";
}

std::string_view display_name(DetectorId id) {
  switch (id) {
    case DetectorId::kMaxSoftmax: return "max-softmax";
    case DetectorId::kOdin: return "ODIN";
    case DetectorId::kMahalanobis: return "MD";
    case DetectorId::kEntropy: return "Entropy";
    case DetectorId::kMargin: return "Margin";
    case DetectorId::kMcDropout: return "MC-D";
    case DetectorId::kMutualInformation: return "MI";
  }
  return "?";
}

std::optional<DetectorId> parse_detector(std::string_view name) {
  for (DetectorId id : kAllDetectors) {
    if (name == to_string(id)) return id;
  }
  return std::nullopt;
}

bool needs_mc_passes(DetectorId id) {
  return id == DetectorId::kMcDropout || id == DetectorId::kMutualInformation;
}

std::string_view to_string(MetricId id) {
  switch (id) {
    case MetricId::kFprAt95Tpr: return "fpr_at_95tpr";
    case MetricId::kDetectionError: return "detection_error";
    case MetricId::kAuroc: return "auroc";
    case MetricId::kAuprIn: return "aupr_in";
    case MetricId::kAuprOut: return "aupr_out";
  }
  return "?";
}

std::string_view display_name(MetricId id) {
  switch (id) {
    case MetricId::kFprAt95Tpr: return "FPR at 95% TPR";
    case MetricId::kDetectionError: return "Detection error";
    case MetricId::kAuroc: return "AUROC";
    case MetricId::kAuprIn: return "AUPR-In";
    case MetricId::kAuprOut: return "AUPR-Out";
  }
  return "?";
}

std::optional<MetricId> parse_metric(std::string_view name) {
  for (MetricId id : kAllMetrics) {
    if (name == to_string(id)) return id;
  }
  return std::nullopt;
}

std::string_view to_string(Orientation o) {
  return o == Orientation::kLowerBetter ? "lower-better" : "higher-better";
}

std::optional<Orientation> parse_orientation(std::string_view name) {
  if (name == "lower-better") return Orientation::kLowerBetter;
  if (name == "higher-better") return Orientation::kHigherBetter;
  return std::nullopt;
}

OodSetRegistry::OodSetRegistry(std::string id_dataset, std::vector<std::string> ood_datasets)
    : id_dataset_(std::move(id_dataset)), ood_datasets_(std::move(ood_datasets)) {
  if (ood_datasets_.empty()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("no OOD datasets declared for '{}'", id_dataset_));
  }
  std::set<std::string> seen;
  for (const auto& name : ood_datasets_) {
    if (name.empty() || !seen.insert(name).second) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("OOD dataset name '{}' is empty or duplicated", name));
    }
  }
}

std::string to_string(const RunKey& key) {
  return fmt::format("{}/{}/{}", key.id_dataset, key.optimizer, key.seed);
}

namespace {

void check_labels(const std::vector<int>& labels, std::size_t expected_rows,
                  std::size_t num_classes, const std::string& field,
                  std::vector<Violation>& out) {
  if (labels.size() != expected_rows) {
    out.push_back({field, fmt::format("has {} labels but the logits have {} rows",
                                      labels.size(), expected_rows)});
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      out.push_back({field, fmt::format("label {} at row {} outside [0, {})", labels[i],
                                        i, num_classes)});
      return;
    }
  }
}

void check_matrix(const Matrix& m, std::size_t num_classes, const std::string& field,
                  std::vector<Violation>& out) {
  if (m.cols() != num_classes) {
    out.push_back({field, fmt::format("has {} columns, expected K = {}", m.cols(),
                                      num_classes)});
  }
  if (m.rows() == 0) out.push_back({field, "has no rows"});
  for (double v : m.values()) {
    if (!std::isfinite(v)) {
      out.push_back({field, "contains a non-finite value"});
      return;
    }
  }
}

}  // namespace

std::vector<Violation> validate_run(const RunRecord& record, const ValidationOptions& options) {
  std::vector<Violation> out;
  const std::size_t k = record.num_classes;
  if (k == 0) out.push_back({"num_classes", "must be positive"});
  if (record.key.id_dataset.empty()) out.push_back({"key.id_dataset", "must be non-empty"});
  if (record.key.optimizer.empty()) out.push_back({"key.optimizer", "must be non-empty"});
  if (record.key.seed == 0) out.push_back({"key.seed", "seed index is 1-based"});

  check_matrix(record.id_test_logits, k, "id_test_logits", out);
  if (record.id_test_labels) {
    check_labels(*record.id_test_labels, record.id_test_logits.rows(), k, "id_test_labels",
                 out);
  }
  if (record.train_logits) check_matrix(*record.train_logits, k, "train_logits", out);
  if (record.train_labels) {
    if (!record.train_logits) {
      out.push_back({"train_labels", "present without train_logits"});
    } else {
      check_labels(*record.train_labels, record.train_logits->rows(), k, "train_labels", out);
    }
  }
  for (const auto& [name, logits] : record.ood_logits) {
    check_matrix(logits, k, "ood_logits[" + name + "]", out);
  }
  for (const auto& [population, passes] : record.mc_passes) {
    const std::string field = "mc_passes[" + population + "]";
    if (population != kIdTestPopulation && !record.ood_logits.contains(population)) {
      out.push_back({field, "names an unknown population"});
    }
    for (std::size_t s = 0; s < passes.size(); ++s) {
      check_matrix(passes[s], k, fmt::format("{}[{}]", field, s), out);
      if (passes[s].rows() != passes.front().rows()) {
        out.push_back({field, "passes disagree on row count"});
        break;
      }
    }
  }

  if (options.require_gaussian_fit) {
    if (!record.train_logits || !record.train_labels) {
      out.push_back({"train_labels", "train logits and labels are required for MD"});
    } else if (k > 0 && record.train_labels->size() == record.train_logits->rows()) {
      std::vector<std::size_t> counts(k, 0);
      for (int label : *record.train_labels) {
        if (label >= 0 && static_cast<std::size_t>(label) < k) ++counts[label];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] < 2) {
          out.push_back({"train_labels",
                         fmt::format("class {} has {} training rows, MD needs >= 2", c,
                                     counts[c])});
        }
      }
    }
  }
  return out;
}

double MetricVector::get(MetricId id) const {
  switch (id) {
    case MetricId::kFprAt95Tpr: return fpr_at_95tpr;
    case MetricId::kDetectionError: return detection_error;
    case MetricId::kAuroc: return auroc;
    case MetricId::kAuprIn: return aupr_in;
    case MetricId::kAuprOut: return aupr_out;
  }
  return 0.0;
}

void MetricVector::set(MetricId id, double value) {
  switch (id) {
    case MetricId::kFprAt95Tpr: fpr_at_95tpr = value; break;
    case MetricId::kDetectionError: detection_error = value; break;
    case MetricId::kAuroc: auroc = value; break;
    case MetricId::kAuprIn: aupr_in = value; break;
    case MetricId::kAuprOut: aupr_out = value; break;
  }
}

void MetricVector::check() const {
  for (MetricId id : kAllMetrics) {
    const double v = get(id);
    if (!std::isfinite(v) || v < 0.0 || v > 100.0) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("{} = {} outside [0, 100]", to_string(id), v));
    }
  }
}

std::map<MetricId, Orientation> AggregationConfig::default_orientation() {
  return {
      {MetricId::kFprAt95Tpr, Orientation::kLowerBetter},
      {MetricId::kDetectionError, Orientation::kLowerBetter},
      {MetricId::kAuroc, Orientation::kHigherBetter},
      {MetricId::kAuprIn, Orientation::kHigherBetter},
      {MetricId::kAuprOut, Orientation::kHigherBetter},
  };
}

Orientation AggregationConfig::orientation_of(MetricId metric) const {
  auto it = orientation.find(metric);
  if (it == orientation.end()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("no orientation configured for {}", to_string(metric)));
  }
  return it->second;
}

void AggregationConfig::check() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("epsilon must be > 0, got {}", epsilon));
  }
  for (MetricId id : kAllMetrics) orientation_of(id);
}

}  // namespace oodbench

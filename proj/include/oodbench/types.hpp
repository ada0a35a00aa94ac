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

#ifndef OODBENCH_TYPES_HPP_
#define OODBENCH_TYPES_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oodbench/matrix.hpp"

namespace oodbench {

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

enum class DetectorId {
  kMaxSoftmax,
  kOdin,
  kMahalanobis,
  kEntropy,
  kMargin,
  kMcDropout,
  kMutualInformation,
};

inline constexpr std::array<DetectorId, 7> kAllDetectors = {
    DetectorId::kMaxSoftmax, DetectorId::kOdin,   DetectorId::kMahalanobis,
    DetectorId::kEntropy,    DetectorId::kMargin, DetectorId::kMcDropout,
    DetectorId::kMutualInformation,
};

// Machine name used in files and on the command line ("max-softmax", "md", ...).
std::string_view to_string(DetectorId id);
// Human-facing label used in rendered tables ("ODIN", "MC-D", ...).
std::string_view display_name(DetectorId id);
std::optional<DetectorId> parse_detector(std::string_view name);
bool needs_mc_passes(DetectorId id);

enum class MetricId {
  kFprAt95Tpr,
  kDetectionError,
  kAuroc,
  kAuprIn,
  kAuprOut,
};

inline constexpr std::array<MetricId, 5> kAllMetrics = {
    MetricId::kFprAt95Tpr, MetricId::kDetectionError, MetricId::kAuroc,
    MetricId::kAuprIn,     MetricId::kAuprOut,
};

std::string_view to_string(MetricId id);
std::string_view display_name(MetricId id);
std::optional<MetricId> parse_metric(std::string_view name);

enum class Orientation { kLowerBetter, kHigherBetter };

std::string_view to_string(Orientation o);
std::optional<Orientation> parse_orientation(std::string_view name);

// ---------------------------------------------------------------------------
// Conditioning keys
// ---------------------------------------------------------------------------

// (ID dataset, OOD dataset, detector): aggregation runs over optimizers.
struct ConditionKeyZeta {
  std::string id_dataset;
  std::string ood_dataset;
  DetectorId detector = DetectorId::kMaxSoftmax;

  auto operator<=>(const ConditionKeyZeta&) const = default;
};

// (ID dataset, detector, optimizer): aggregation runs over OOD sets.
struct ConditionKeyXi {
  std::string id_dataset;
  DetectorId detector = DetectorId::kMaxSoftmax;
  std::string optimizer;

  auto operator<=>(const ConditionKeyXi&) const = default;
};

// The OOD sets declared for one ID dataset, in declaration order.
class OodSetRegistry {
 public:
  OodSetRegistry(std::string id_dataset, std::vector<std::string> ood_datasets);

  const std::string& id_dataset() const noexcept { return id_dataset_; }
  const std::vector<std::string>& ood_datasets() const noexcept { return ood_datasets_; }

 private:
  std::string id_dataset_;
  std::vector<std::string> ood_datasets_;
};

// ---------------------------------------------------------------------------
// Model outputs
// ---------------------------------------------------------------------------

struct RunKey {
  std::string id_dataset;
  std::string optimizer;
  std::uint32_t seed = 1;  // 1-based model index within (id_dataset, optimizer)

  auto operator<=>(const RunKey&) const = default;
};

std::string to_string(const RunKey& key);

inline constexpr std::string_view kIdTestPopulation = "id_test";

struct RunRecord {
  RunKey key;
  std::size_t num_classes = 0;
  Matrix id_test_logits;
  std::optional<std::vector<int>> id_test_labels;
  std::optional<Matrix> train_logits;
  std::optional<std::vector<int>> train_labels;
  std::map<std::string, Matrix> ood_logits;
  // population ("id_test" or an OOD name) -> S stochastic passes
  std::map<std::string, std::vector<Matrix>> mc_passes;

  bool operator==(const RunRecord&) const = default;
};

struct Violation {
  std::string field;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

struct ValidationOptions {
  // Adds the Gaussian-fit preconditions: train data present, >= 2 rows per class.
  bool require_gaussian_fit = false;
};

std::vector<Violation> validate_run(const RunRecord& record,
                                    const ValidationOptions& options = {});

// ---------------------------------------------------------------------------
// Metrics and moments
// ---------------------------------------------------------------------------

// The five detection metrics for one (run, OOD set, detector), in percent.
struct MetricVector {
  double fpr_at_95tpr = 0.0;
  double detection_error = 0.0;
  double auroc = 0.0;
  double aupr_in = 0.0;
  double aupr_out = 0.0;

  double get(MetricId id) const;
  void set(MetricId id, double value);
  // Throws kInvalidInput if any field is outside [0, 100] or not finite.
  void check() const;

  bool operator==(const MetricVector&) const = default;
};

struct MomentPair {
  double mean = 0.0;
  double variance = 0.0;
};

struct AggregationConfig {
  double epsilon = 1e-12;
  std::map<MetricId, Orientation> orientation = default_orientation();

  static std::map<MetricId, Orientation> default_orientation();
  Orientation orientation_of(MetricId metric) const;
  // Throws kInvalidInput unless epsilon > 0 and every metric has an orientation.
  void check() const;
};

struct WeightVector {
  std::vector<std::string> members;
  std::vector<double> weights;
};

}  // namespace oodbench

#endif  // OODBENCH_TYPES_HPP_

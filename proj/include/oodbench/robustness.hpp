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

#ifndef OODBENCH_ROBUSTNESS_HPP_
#define OODBENCH_ROBUSTNESS_HPP_

// Optimizer-robustness aggregation. Each metric is treated as a random
// variable whose distribution, under a fixed condition, is a mixture over
// optimizers (zeta conditioning) or over OOD sets (xi conditioning). Member
// moments come from repeated training seeds; members are weighted by inverse
// standard deviation, and the mixture is summarized by a coefficient of
// variation (or mean * std for lower-is-better metrics). Lower score = more
// robust.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "oodbench/types.hpp"

namespace oodbench {

struct SampleKey {
  std::string id_dataset;
  std::string ood_dataset;
  DetectorId detector = DetectorId::kMaxSoftmax;
  std::string optimizer;
  std::uint32_t seed = 1;

  auto operator<=>(const SampleKey&) const = default;
};

/// Metric realizations keyed by (ID, OOD, detector, optimizer, seed). Keeps the
/// first-appearance order of names so reports follow the input's ordering.
class MetricSampleTable {
 public:
  /// Throws kInvalidInput on a duplicate key or an out-of-range metric.
  void add(const SampleKey& key, const MetricVector& metrics);

  const std::map<SampleKey, MetricVector>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  const std::vector<std::string>& id_datasets() const noexcept { return id_order_; }
  std::vector<std::string> optimizers(const std::string& id_dataset) const;
  std::vector<std::string> ood_datasets(const std::string& id_dataset) const;
  std::vector<DetectorId> detectors(const std::string& id_dataset) const;

  /// Seed realizations for one (zeta, t) group, ascending by seed.
  std::vector<MetricVector> group(const std::string& id_dataset, const std::string& ood_dataset,
                                  DetectorId detector, const std::string& optimizer) const;

 private:
  std::map<SampleKey, MetricVector> entries_;
  std::vector<std::string> id_order_;
  std::map<std::string, std::vector<std::string>> optimizer_order_;
  std::map<std::string, std::vector<std::string>> ood_order_;
  std::map<std::string, std::vector<DetectorId>> detector_order_;
};

struct RobustnessScore {
  MetricId metric = MetricId::kAuroc;
  std::string condition;
  double value = 0.0;
  Orientation orientation = Orientation::kHigherBetter;
};

/// Population mean and variance (1/N normalization).
MomentPair moment_estimate(std::span<const double> values);

/// c_t = 1 / (sqrt(Var_t) + epsilon), w_t = c_t / sum c.
WeightVector mixture_weights(std::span<const double> variances, const AggregationConfig& config);
WeightVector mixture_weights(std::span<const std::string> members,
                             std::span<const double> variances, const AggregationConfig& config);

/// mu = sum w_t mu_t; Var = sum w_t (Var_t + (mu - mu_t)^2).
MomentPair mixture_moments(std::span<const MomentPair> members, const WeightVector& weights);

/// sqrt(Var) / mu for higher-is-better metrics, mu * sqrt(Var) for lower-is-better.
RobustnessScore robustness_score(const MomentPair& moments, Orientation orientation,
                                 MetricId metric = MetricId::kAuroc,
                                 std::string condition = {});

/// One metric's trip through the mixture pipeline.
struct MetricAggregate {
  MetricId metric = MetricId::kAuroc;
  std::vector<std::string> members;  // optimizers (zeta) or OOD sets (xi)
  std::vector<MomentPair> member_moments;
  WeightVector weights;
  MomentPair mixture;
  RobustnessScore score;
};

std::string label(const ConditionKeyZeta& key);
std::string label(const ConditionKeyXi& key);

/// Mixture over the optimizer set for a fixed (ID, OOD, detector). Returns one
/// entry per metric in kAllMetrics order.
std::vector<MetricAggregate> aggregate_zeta(const MetricSampleTable& table,
                                            const ConditionKeyZeta& zeta,
                                            std::span<const std::string> optimizers,
                                            const AggregationConfig& config);

/// Mixture over the OOD sets of the ID dataset for a fixed (ID, detector, optimizer).
std::vector<MetricAggregate> aggregate_xi(const MetricSampleTable& table, const ConditionKeyXi& xi,
                                          const OodSetRegistry& ood_sets,
                                          const AggregationConfig& config);

/// Ascending by value, ties broken by condition name.
std::vector<RobustnessScore> rank_conditions(std::vector<RobustnessScore> scores);

enum class Conditioning { kZeta, kXi };

std::string_view to_string(Conditioning c);

struct ConditionResult {
  Conditioning conditioning = Conditioning::kZeta;
  std::string id_dataset;
  std::string ood_dataset;  // zeta only
  DetectorId detector = DetectorId::kMaxSoftmax;
  std::string optimizer;    // xi only
  std::vector<MetricAggregate> metrics;
};

/// Every condition present in the table. The optimizer set (zeta) or OOD set
/// (xi) of an ID dataset is everything that appears under it; a condition that
/// lacks any member raises kIncompleteCondition.
std::vector<ConditionResult> aggregate_table(const MetricSampleTable& table,
                                             Conditioning conditioning,
                                             const AggregationConfig& config);

}  // namespace oodbench

#endif  // OODBENCH_ROBUSTNESS_HPP_

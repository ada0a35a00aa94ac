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

#ifndef OODBENCH_METRICS_HPP_
#define OODBENCH_METRICS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "oodbench/types.hpp"

namespace oodbench {

// ID scores are the positives, OOD scores the negatives. A sample is
// classified ID iff its score >= threshold.
struct EvaluationPair {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;
  std::uint64_t balance_seed = 0;
};

// Indices (ascending) of a size-`keep` subset of [0, total), drawn without
// replacement by a Fisher-Yates pass seeded with `seed`.
std::vector<std::size_t> balanced_subset(std::size_t total, std::size_t keep, std::uint64_t seed);

// Subsample the larger population to the size of the smaller one.
EvaluationPair balance(const EvaluationPair& pair);

struct ThresholdResult {
  double threshold = 0.0;
  double achieved_tpr = 0.0;
};

// Largest threshold whose TPR reaches target_tpr: the k-th largest ID score
// with k = ceil(target_tpr * n). Ties can push achieved_tpr above k/n.
ThresholdResult threshold_at_tpr(std::span<const double> id_scores, double target_tpr = 0.95);

inline constexpr double kTargetTpr = 0.95;

// The per-metric functions expect an already balanced pair; evaluate_all balances.
double fpr_at_95tpr(const EvaluationPair& pair);
double detection_error(const EvaluationPair& pair);
double auroc(const EvaluationPair& pair);

enum class PositiveClass { kIn, kOut };
double aupr(const EvaluationPair& pair, PositiveClass positives);

MetricVector evaluate_all(const EvaluationPair& pair);

// 100 * wins / pairs, where wins is counted in half-units (ties count 1 of 2).
// Computed so that auroc(a, b) + auroc(b, a) == 100 holds exactly.
double auroc_percent(std::uint64_t twice_wins, std::uint64_t pairs);

}  // namespace oodbench

#endif  // OODBENCH_METRICS_HPP_

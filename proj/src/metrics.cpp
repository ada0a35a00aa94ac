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

#include "oodbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "oodbench/error.hpp"
#include "oodbench/random.hpp"

namespace oodbench {
namespace {

void require_populations(const EvaluationPair& pair) {
  if (pair.id_scores.empty() || pair.ood_scores.empty()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("empty population (id: {}, ood: {})", pair.id_scores.size(),
                            pair.ood_scores.size()));
  }
  for (const auto* scores : {&pair.id_scores, &pair.ood_scores}) {
    for (double s : *scores) {
      if (std::isnan(s)) throw Error(ErrorCode::kInvalidInput, "score is NaN");
    }
  }
}

std::vector<double> take(const std::vector<double>& values, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(values[i]);
  return out;
}

std::size_t count_at_least(std::span<const double> values, double threshold) {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double v) { return v >= threshold; }));
}

struct Labeled {
  double score;
  bool positive;
};

}  // namespace

std::vector<std::size_t> balanced_subset(std::size_t total, std::size_t keep,
                                         std::uint64_t seed) {
  if (keep > total) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("cannot keep {} of {} samples", keep, total));
  }
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

EvaluationPair balance(const EvaluationPair& pair) {
  const std::size_t n_id = pair.id_scores.size();
  const std::size_t n_ood = pair.ood_scores.size();
  if (n_id == n_ood) return pair;
  EvaluationPair out = pair;
  if (n_id > n_ood) {
    out.id_scores = take(pair.id_scores, balanced_subset(n_id, n_ood, pair.balance_seed));
  } else {
    out.ood_scores = take(pair.ood_scores, balanced_subset(n_ood, n_id, pair.balance_seed));
  }
  return out;
}

ThresholdResult threshold_at_tpr(std::span<const double> id_scores, double target_tpr) {
  if (id_scores.empty()) throw Error(ErrorCode::kInvalidInput, "no ID scores");
  if (!(target_tpr > 0.0 && target_tpr <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("target TPR must be in (0, 1], got {}", target_tpr));
  }
  const std::size_t n = id_scores.size();
  // The 1e-9 guard keeps e.g. 0.95 * 100 from ceiling to 96.
  auto k = static_cast<std::size_t>(std::ceil(target_tpr * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<double> sorted(id_scores.begin(), id_scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   sorted.end(), std::greater<>());
  const double tau = sorted[k - 1];
  return {tau, static_cast<double>(count_at_least(id_scores, tau)) / static_cast<double>(n)};
}

double fpr_at_95tpr(const EvaluationPair& pair) {
  require_populations(pair);
  const ThresholdResult t = threshold_at_tpr(pair.id_scores, kTargetTpr);
  const double fpr = static_cast<double>(count_at_least(pair.ood_scores, t.threshold)) /
                     static_cast<double>(pair.ood_scores.size());
  return 100.0 * fpr;
}

double detection_error(const EvaluationPair& pair) {
  require_populations(pair);
  const ThresholdResult t = threshold_at_tpr(pair.id_scores, kTargetTpr);
  const double fpr = static_cast<double>(count_at_least(pair.ood_scores, t.threshold)) /
                     static_cast<double>(pair.ood_scores.size());
  return 100.0 * (0.5 * (1.0 - t.achieved_tpr) + 0.5 * fpr);
}

double auroc_percent(std::uint64_t twice_wins, std::uint64_t pairs) {
  const std::uint64_t twice_pairs = 2 * pairs;
  if (2 * twice_wins <= twice_pairs) {
    return 100.0 * static_cast<double>(twice_wins) / static_cast<double>(twice_pairs);
  }
  return 100.0 - 100.0 * static_cast<double>(twice_pairs - twice_wins) /
                     static_cast<double>(twice_pairs);
}

double auroc(const EvaluationPair& pair) {
  require_populations(pair);
  // Mann-Whitney U via one ascending sweep over tie blocks; U is kept in
  // half-units so it stays an exact integer.
  std::vector<Labeled> all;
  all.reserve(pair.id_scores.size() + pair.ood_scores.size());
  for (double s : pair.id_scores) all.push_back({s, true});
  for (double s : pair.ood_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Labeled& a, const Labeled& b) {
    return a.score < b.score;
  });
  std::uint64_t twice_wins = 0;
  std::uint64_t ood_below = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::uint64_t id_block = 0, ood_block = 0;
    for (; j < all.size() && all[j].score == all[i].score; ++j) {
      (all[j].positive ? id_block : ood_block) += 1;
    }
    twice_wins += 2 * id_block * ood_below + id_block * ood_block;
    ood_below += ood_block;
    i = j;
  }
  return auroc_percent(twice_wins,
                       static_cast<std::uint64_t>(pair.id_scores.size()) * pair.ood_scores.size());
}

double aupr(const EvaluationPair& pair, PositiveClass positives) {
  require_populations(pair);
  const bool in = positives == PositiveClass::kIn;
  std::vector<Labeled> all;
  all.reserve(pair.id_scores.size() + pair.ood_scores.size());
  for (double s : pair.id_scores) all.push_back({in ? s : -s, in});
  for (double s : pair.ood_scores) all.push_back({in ? s : -s, !in});
  std::sort(all.begin(), all.end(), [](const Labeled& a, const Labeled& b) {
    return a.score > b.score;
  });
  const double total_pos = static_cast<double>(in ? pair.id_scores.size()
                                                  : pair.ood_scores.size());
  std::size_t tp = 0, fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    const std::size_t tp_before = tp;
    for (; j < all.size() && all[j].score == all[i].score; ++j) {
      (all[j].positive ? tp : fp) += 1;
    }
    if (tp > tp_before) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      area += static_cast<double>(tp - tp_before) / total_pos * precision;
    }
    i = j;
  }
  // accumulated fractions can overshoot 1 by an ulp
  return std::min(100.0, 100.0 * area);
}

MetricVector evaluate_all(const EvaluationPair& pair) {
  require_populations(pair);
  const EvaluationPair balanced = balance(pair);
  MetricVector out;
  out.fpr_at_95tpr = fpr_at_95tpr(balanced);
  out.detection_error = detection_error(balanced);
  out.auroc = auroc(balanced);
  out.aupr_in = aupr(balanced, PositiveClass::kIn);
  out.aupr_out = aupr(balanced, PositiveClass::kOut);
  return out;
}

}  // namespace oodbench

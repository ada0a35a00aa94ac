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

#include "oodbench/robustness.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "oodbench/error.hpp"

namespace oodbench {
namespace {

template <typename T>
void remember(std::vector<T>& order, const T& value) {
  if (std::find(order.begin(), order.end(), value) == order.end()) order.push_back(value);
}

template <typename Map>
auto lookup_order(const Map& map, const std::string& key) {
  auto it = map.find(key);
  return it == map.end() ? typename Map::mapped_type{} : it->second;
}

// Shared tail of both conditionings: `groups[i]` holds the seed realizations of member i.
std::vector<MetricAggregate> aggregate_members(const std::vector<std::string>& members,
                                               const std::vector<std::vector<MetricVector>>& groups,
                                               const std::string& condition,
                                               const AggregationConfig& config) {
  config.check();
  std::vector<MetricAggregate> out;
  out.reserve(kAllMetrics.size());
  std::vector<double> values;
  std::vector<double> variances(members.size());
  for (MetricId metric : kAllMetrics) {
    MetricAggregate agg;
    agg.metric = metric;
    agg.members = members;
    for (std::size_t m = 0; m < members.size(); ++m) {
      values.clear();
      for (const MetricVector& v : groups[m]) values.push_back(v.get(metric));
      agg.member_moments.push_back(moment_estimate(values));
      variances[m] = agg.member_moments.back().variance;
    }
    agg.weights = mixture_weights(members, variances, config);
    agg.mixture = mixture_moments(agg.member_moments, agg.weights);
    agg.score = robustness_score(agg.mixture, config.orientation_of(metric), metric, condition);
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace

void MetricSampleTable::add(const SampleKey& key, const MetricVector& metrics) {
  if (key.id_dataset.empty() || key.ood_dataset.empty() || key.optimizer.empty()) {
    throw Error(ErrorCode::kInvalidInput, "sample key fields must be non-empty");
  }
  metrics.check();
  if (!entries_.emplace(key, metrics).second) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("duplicate sample ({}, {}, {}, {}, seed {})", key.id_dataset,
                            key.ood_dataset, to_string(key.detector), key.optimizer, key.seed));
  }
  remember(id_order_, key.id_dataset);
  remember(optimizer_order_[key.id_dataset], key.optimizer);
  remember(ood_order_[key.id_dataset], key.ood_dataset);
  remember(detector_order_[key.id_dataset], key.detector);
}

std::vector<std::string> MetricSampleTable::optimizers(const std::string& id_dataset) const {
  return lookup_order(optimizer_order_, id_dataset);
}

std::vector<std::string> MetricSampleTable::ood_datasets(const std::string& id_dataset) const {
  return lookup_order(ood_order_, id_dataset);
}

std::vector<DetectorId> MetricSampleTable::detectors(const std::string& id_dataset) const {
  return lookup_order(detector_order_, id_dataset);
}

std::vector<MetricVector> MetricSampleTable::group(const std::string& id_dataset,
                                                   const std::string& ood_dataset,
                                                   DetectorId detector,
                                                   const std::string& optimizer) const {
  std::vector<MetricVector> out;
  const SampleKey first{id_dataset, ood_dataset, detector, optimizer, 0};
  for (auto it = entries_.lower_bound(first); it != entries_.end(); ++it) {
    const SampleKey& k = it->first;
    if (k.id_dataset != id_dataset || k.ood_dataset != ood_dataset || k.detector != detector ||
        k.optimizer != optimizer) {
      break;
    }
    out.push_back(it->second);
  }
  return out;
}

MomentPair moment_estimate(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidInput, "moment estimate of no values");
  // Welford; m2 / N is the population variance.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double x : values) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidInput, "non-finite metric value");
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  return {mean, std::max(0.0, m2 / static_cast<double>(n))};
}

WeightVector mixture_weights(std::span<const double> variances, const AggregationConfig& config) {
  std::vector<std::string> members;
  members.reserve(variances.size());
  for (std::size_t i = 0; i < variances.size(); ++i) members.push_back(std::to_string(i));
  return mixture_weights(members, variances, config);
}

WeightVector mixture_weights(std::span<const std::string> members,
                             std::span<const double> variances, const AggregationConfig& config) {
  if (members.size() != variances.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} members but {} variances", members.size(), variances.size()));
  }
  if (variances.empty()) throw Error(ErrorCode::kInvalidInput, "no mixture members");
  if (!(config.epsilon > 0.0)) throw Error(ErrorCode::kInvalidInput, "epsilon must be > 0");
  WeightVector out;
  out.members.assign(members.begin(), members.end());
  out.weights.reserve(variances.size());
  double total = 0.0;
  for (double var : variances) {
    if (!(var >= 0.0) || !std::isfinite(var)) {
      throw Error(ErrorCode::kInvalidInput, fmt::format("variance {} is not >= 0", var));
    }
    const double confidence = 1.0 / (std::sqrt(var) + config.epsilon);
    out.weights.push_back(confidence);
    total += confidence;
  }
  for (double& w : out.weights) w /= total;
  return out;
}

MomentPair mixture_moments(std::span<const MomentPair> members, const WeightVector& weights) {
  if (members.size() != weights.weights.size() || members.empty()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} member moments but {} weights", members.size(),
                            weights.weights.size()));
  }
  double total = 0.0;
  for (double w : weights.weights) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw Error(ErrorCode::kInvalidInput, fmt::format("weight {} outside [0, 1]", w));
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("weights sum to {}, not 1", total));
  }
  double mean = 0.0;
  for (std::size_t t = 0; t < members.size(); ++t) mean += weights.weights[t] * members[t].mean;
  double variance = 0.0;
  for (std::size_t t = 0; t < members.size(); ++t) {
    const double spread = mean - members[t].mean;
    variance += weights.weights[t] * (members[t].variance + spread * spread);
  }
  return {mean, variance};
}

RobustnessScore robustness_score(const MomentPair& moments, Orientation orientation,
                                 MetricId metric, std::string condition) {
  if (!(moments.variance >= 0.0)) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("variance {} is negative", moments.variance));
  }
  RobustnessScore out{metric, std::move(condition), 0.0, orientation};
  const double sd = std::sqrt(moments.variance);
  if (orientation == Orientation::kHigherBetter) {
    if (!(moments.mean > 0.0)) {
      throw Error(ErrorCode::kDomain,
                  fmt::format("coefficient of variation needs mean > 0, got {} for {}",
                              moments.mean, to_string(metric)));
    }
    out.value = sd / moments.mean;
  } else {
    out.value = moments.mean * sd;
  }
  return out;
}

std::string label(const ConditionKeyZeta& key) {
  return fmt::format("{}|{}|{}", key.id_dataset, key.ood_dataset, to_string(key.detector));
}

std::string label(const ConditionKeyXi& key) {
  return fmt::format("{}|{}|{}", key.id_dataset, to_string(key.detector), key.optimizer);
}

std::vector<MetricAggregate> aggregate_zeta(const MetricSampleTable& table,
                                            const ConditionKeyZeta& zeta,
                                            std::span<const std::string> optimizers,
                                            const AggregationConfig& config) {
  if (zeta.id_dataset.empty() || zeta.ood_dataset.empty()) {
    throw Error(ErrorCode::kInvalidInput, "zeta key fields must be non-empty");
  }
  if (optimizers.empty()) throw Error(ErrorCode::kInvalidInput, "empty optimizer set");
  std::vector<std::string> members(optimizers.begin(), optimizers.end());
  std::vector<std::vector<MetricVector>> groups;
  std::vector<std::string> missing;
  for (const std::string& t : members) {
    groups.push_back(table.group(zeta.id_dataset, zeta.ood_dataset, zeta.detector, t));
    if (groups.back().empty()) missing.push_back(t);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kIncompleteCondition,
                fmt::format("condition {} has no samples for optimizer(s): {}", label(zeta),
                            fmt::join(missing, ", ")));
  }
  return aggregate_members(members, groups, label(zeta), config);
}

std::vector<MetricAggregate> aggregate_xi(const MetricSampleTable& table, const ConditionKeyXi& xi,
                                          const OodSetRegistry& ood_sets,
                                          const AggregationConfig& config) {
  if (ood_sets.id_dataset() != xi.id_dataset) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("OOD registry is for '{}', condition is for '{}'",
                            ood_sets.id_dataset(), xi.id_dataset));
  }
  const auto declared = table.optimizers(xi.id_dataset);
  if (std::find(declared.begin(), declared.end(), xi.optimizer) == declared.end()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("optimizer '{}' is not in the optimizer set of '{}'", xi.optimizer,
                            xi.id_dataset));
  }
  std::vector<std::vector<MetricVector>> groups;
  std::vector<std::string> missing;
  for (const std::string& o : ood_sets.ood_datasets()) {
    groups.push_back(table.group(xi.id_dataset, o, xi.detector, xi.optimizer));
    if (groups.back().empty()) missing.push_back(o);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kIncompleteCondition,
                fmt::format("condition {} has no samples for OOD set(s): {}", label(xi),
                            fmt::join(missing, ", ")));
  }
  return aggregate_members(ood_sets.ood_datasets(), groups, label(xi), config);
}

std::vector<RobustnessScore> rank_conditions(std::vector<RobustnessScore> scores) {
  for (const RobustnessScore& s : scores) {
    if (s.metric != scores.front().metric || s.orientation != scores.front().orientation) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("cannot rank {} ({}) against {} ({})", to_string(s.metric),
                              to_string(s.orientation), to_string(scores.front().metric),
                              to_string(scores.front().orientation)));
    }
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const RobustnessScore& a, const RobustnessScore& b) {
                     if (a.value != b.value) return a.value < b.value;
                     return a.condition < b.condition;
                   });
  return scores;
}

std::string_view to_string(Conditioning c) { return c == Conditioning::kZeta ? "zeta" : "xi"; }

std::vector<ConditionResult> aggregate_table(const MetricSampleTable& table,
                                             Conditioning conditioning,
                                             const AggregationConfig& config) {
  config.check();
  std::vector<ConditionResult> out;
  for (const std::string& id : table.id_datasets()) {
    const auto optimizers = table.optimizers(id);
    const auto oods = table.ood_datasets(id);
    const auto detectors = table.detectors(id);
    if (conditioning == Conditioning::kZeta) {
      for (const std::string& ood : oods) {
        for (DetectorId det : detectors) {
          bool present = false;
          for (const std::string& t : optimizers) present |= !table.group(id, ood, det, t).empty();
          if (!present) continue;
          const ConditionKeyZeta key{id, ood, det};
          out.push_back({conditioning, id, ood, det, {},
                         aggregate_zeta(table, key, optimizers, config)});
        }
      }
    } else {
      const OodSetRegistry registry(id, oods);
      for (DetectorId det : detectors) {
        for (const std::string& t : optimizers) {
          bool present = false;
          for (const std::string& o : oods) present |= !table.group(id, o, det, t).empty();
          if (!present) continue;
          const ConditionKeyXi key{id, det, t};
          out.push_back({conditioning, id, {}, det, t, aggregate_xi(table, key, registry, config)});
        }
      }
    }
  }
  return out;
}

}  // namespace oodbench

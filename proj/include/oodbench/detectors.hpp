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

#ifndef OODBENCH_DETECTORS_HPP_
#define OODBENCH_DETECTORS_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oodbench/matrix.hpp"
#include "oodbench/types.hpp"

namespace oodbench {

/// Scores for one population under one detector. Larger always means "more
/// in-distribution"; detectors never threshold.
struct ScoreSet {
  DetectorId detector = DetectorId::kMaxSoftmax;
  std::string population;
  std::vector<double> scores;
};

inline constexpr double kOdinDefaultTemperature = 1000.0;

/// Temperature-scaled softmax, max-shifted before exponentiation.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

ScoreSet max_softmax_score(const Matrix& logits, std::string population = {});
ScoreSet odin_score(const Matrix& logits, double temperature = kOdinDefaultTemperature,
                    std::string population = {});
/// Negative natural-log entropy of the softmax.
ScoreSet entropy_score(const Matrix& logits, std::string population = {});
/// Gap between the two largest softmax probabilities.
ScoreSet margin_score(const Matrix& logits, std::string population = {});

/// Class-conditional Gaussians with one tied covariance, fitted on logits.
struct GaussianModel {
  std::vector<std::vector<double>> class_means;
  Matrix shared_covariance;
  /// Lower Cholesky factor L of (shared_covariance + ridge * I).
  Matrix precision_factor;
  double ridge = 0.0;
  /// L^{-1} mu_k, cached so scoring needs one triangular solve per row.
  std::vector<std::vector<double>> whitened_means;

  std::size_t num_classes() const noexcept { return class_means.size(); }
};

struct GaussianFitOptions {
  /// Overrides the default ridge of 1e-6 * trace(Sigma) / K (floored at 1e-6
  /// when Sigma vanishes). Zero is allowed when Sigma is already positive definite.
  std::optional<double> ridge;
};

GaussianModel fit_gaussian(const Matrix& train_logits, std::span<const int> train_labels,
                           std::size_t num_classes, const GaussianFitOptions& options = {});

/// -min_k (f - mu_k)^T (Sigma + ridge I)^{-1} (f - mu_k)
ScoreSet mahalanobis_score(const GaussianModel& model, const Matrix& logits,
                           std::string population = {});

/// Max of the MC-averaged softmax over S >= 2 stochastic passes.
ScoreSet mc_dropout_score(std::span<const Matrix> passes, std::string population = {});

/// Negative mutual information H(mean p) - mean H(p_s), clamped at zero.
ScoreSet mutual_information_score(std::span<const Matrix> passes,
                                  std::string population = {});

}  // namespace oodbench

#endif  // OODBENCH_DETECTORS_HPP_

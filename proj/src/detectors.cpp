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

#include "oodbench/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "oodbench/error.hpp"
#include "oodbench/simd/kernels.hpp"

namespace oodbench {
namespace {

using simd::KernelTable;

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidInput, fmt::format("{} contains a non-finite value", what));
    }
  }
}

void require_logits(const Matrix& logits) {
  if (logits.cols() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("detectors need K >= 2 classes, got {}", logits.cols()));
  }
  require_finite(logits.values(), "logits");
}

void require_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("temperature must be finite and > 0, got {}", temperature));
  }
}

// Fills `exps` with exp((x - max x) / T) and returns their sum (>= 1).
double shifted_exps(const KernelTable& k, std::span<const double> row, double temperature,
                    double* exps) {
  const double shift = k.max(row.data(), row.size());
  return k.exp_shifted(row.data(), row.size(), shift, 1.0 / temperature, exps);
}

// Natural-log entropy of softmax(row) via log-sum-exp:
// H = ln(sum e^z) - sum p_k z_k with z = x - max x.
double row_entropy(const KernelTable& k, std::span<const double> row, double* exps,
                   double* shifted, double* sum_out = nullptr) {
  const std::size_t n = row.size();
  const double shift = k.max(row.data(), n);
  for (std::size_t i = 0; i < n; ++i) shifted[i] = row[i] - shift;
  const double sum = k.exp_shifted(row.data(), n, shift, 1.0, exps);
  const double h = std::log(sum) - k.dot(exps, shifted, n) / sum;
  if (sum_out != nullptr) *sum_out = sum;
  return h > 0.0 ? h : 0.0;
}

void require_passes(std::span<const Matrix> passes) {
  if (passes.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("MC scoring needs S >= 2 passes, got {}", passes.size()));
  }
  for (const Matrix& pass : passes) {
    if (pass.rows() != passes.front().rows() || pass.cols() != passes.front().cols()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("MC pass shape {}x{} differs from {}x{}", pass.rows(),
                              pass.cols(), passes.front().rows(), passes.front().cols()));
    }
    require_logits(pass);
  }
}

// Lower-triangular solve L z = f.
void forward_solve(const KernelTable& k, const Matrix& lower, std::span<const double> f,
                   double* z) {
  const std::size_t n = lower.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double partial = i == 0 ? 0.0 : k.dot(lower.row(i).data(), z, i);
    z[i] = (f[i] - partial) / lower(i, i);
  }
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  require_temperature(temperature);
  require_finite(logits, "logits");
  if (logits.empty()) throw Error(ErrorCode::kInvalidInput, "softmax of an empty vector");
  const KernelTable& k = simd::active_kernels();
  std::vector<double> out(logits.size());
  const double sum = shifted_exps(k, logits, temperature, out.data());
  k.scale(1.0 / sum, out.data(), out.size());
  return out;
}

ScoreSet max_softmax_score(const Matrix& logits, std::string population) {
  ScoreSet out = odin_score(logits, 1.0, std::move(population));
  out.detector = DetectorId::kMaxSoftmax;
  return out;
}

ScoreSet odin_score(const Matrix& logits, double temperature, std::string population) {
  require_temperature(temperature);
  require_logits(logits);
  const KernelTable& k = simd::active_kernels();
  ScoreSet out{DetectorId::kOdin, std::move(population), std::vector<double>(logits.rows())};
  std::vector<double> exps(logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double sum = shifted_exps(k, logits.row(i), temperature, exps.data());
    out.scores[i] = k.max(exps.data(), exps.size()) / sum;
  }
  return out;
}

ScoreSet entropy_score(const Matrix& logits, std::string population) {
  require_logits(logits);
  const KernelTable& k = simd::active_kernels();
  ScoreSet out{DetectorId::kEntropy, std::move(population), std::vector<double>(logits.rows())};
  std::vector<double> exps(logits.cols()), shifted(logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    out.scores[i] = -row_entropy(k, logits.row(i), exps.data(), shifted.data());
  }
  return out;
}

ScoreSet margin_score(const Matrix& logits, std::string population) {
  require_logits(logits);
  const KernelTable& k = simd::active_kernels();
  ScoreSet out{DetectorId::kMargin, std::move(population), std::vector<double>(logits.rows())};
  std::vector<double> exps(logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double sum = shifted_exps(k, logits.row(i), 1.0, exps.data());
    double first = -1.0, second = -1.0;
    for (double e : exps) {
      if (e > first) {
        second = first;
        first = e;
      } else if (e > second) {
        second = e;
      }
    }
    out.scores[i] = (first - second) / sum;
  }
  return out;
}

GaussianModel fit_gaussian(const Matrix& train_logits, std::span<const int> train_labels,
                           std::size_t num_classes, const GaussianFitOptions& options) {
  const std::size_t m = train_logits.rows();
  const std::size_t dim = train_logits.cols();
  if (dim != num_classes) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("train logits have {} columns, expected K = {}", dim, num_classes));
  }
  if (train_labels.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} train labels for {} train rows", train_labels.size(), m));
  }
  require_finite(train_logits.values(), "train logits");

  GaussianModel model;
  model.class_means.assign(num_classes, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const int y = train_labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw Error(ErrorCode::kFit, fmt::format("train label {} at row {} outside [0, {})", y,
                                               i, num_classes));
    }
    ++counts[y];
    auto row = train_logits.row(i);
    for (std::size_t d = 0; d < dim; ++d) model.class_means[y][d] += row[d];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] < 2) {
      throw Error(ErrorCode::kFit,
                  fmt::format("class {} has {} training rows; the Gaussian fit needs >= 2", c,
                              counts[c]));
    }
    for (double& v : model.class_means[c]) v /= static_cast<double>(counts[c]);
  }

  // Tied covariance, population normalization (1/m).
  Matrix cov(dim, dim, 0.0);
  std::vector<double> centered(dim);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& mu = model.class_means[train_labels[i]];
    auto row = train_logits.row(i);
    for (std::size_t d = 0; d < dim; ++d) centered[d] = row[d] - mu[d];
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b <= a; ++b) cov(a, b) += centered[a] * centered[b];
    }
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      cov(a, b) /= static_cast<double>(m);
      cov(b, a) = cov(a, b);
    }
    trace += cov(a, a);
  }
  model.shared_covariance = cov;

  if (options.ridge) {
    if (!(*options.ridge >= 0.0)) {
      throw Error(ErrorCode::kInvalidInput, "ridge must be >= 0");
    }
    model.ridge = *options.ridge;
  } else {
    model.ridge = trace > 0.0 ? 1e-6 * trace / static_cast<double>(dim) : 1e-6;
  }

  // Cholesky of Sigma + ridge * I.
  Matrix lower(dim, dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = cov(i, j) + (i == j ? model.ridge : 0.0);
      for (std::size_t p = 0; p < j; ++p) s -= lower(i, p) * lower(j, p);
      if (i == j) {
        if (!(s > 0.0)) {
          throw Error(ErrorCode::kNumerical,
                      fmt::format("covariance + ridge is not positive definite (pivot {} = {})",
                                  i, s));
        }
        lower(i, i) = std::sqrt(s);
      } else {
        lower(i, j) = s / lower(j, j);
      }
    }
  }
  model.precision_factor = std::move(lower);

  const KernelTable& k = simd::active_kernels();
  model.whitened_means.assign(num_classes, std::vector<double>(dim));
  for (std::size_t c = 0; c < num_classes; ++c) {
    forward_solve(k, model.precision_factor, model.class_means[c],
                  model.whitened_means[c].data());
  }
  return model;
}

ScoreSet mahalanobis_score(const GaussianModel& model, const Matrix& logits,
                           std::string population) {
  const std::size_t dim = model.precision_factor.rows();
  if (dim == 0 || model.whitened_means.empty()) {
    throw Error(ErrorCode::kInvalidInput, "Gaussian model is not fitted");
  }
  if (logits.cols() != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("logits have {} columns, model expects {}", logits.cols(), dim));
  }
  require_finite(logits.values(), "logits");
  const KernelTable& k = simd::active_kernels();
  ScoreSet out{DetectorId::kMahalanobis, std::move(population),
               std::vector<double>(logits.rows())};
  std::vector<double> z(dim);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    forward_solve(k, model.precision_factor, logits.row(i), z.data());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& mean : model.whitened_means) {
      const double d = k.squared_distance(z.data(), mean.data(), dim);
      best = d < best ? d : best;
    }
    out.scores[i] = 0.0 - best;
  }
  return out;
}

ScoreSet mc_dropout_score(std::span<const Matrix> passes, std::string population) {
  require_passes(passes);
  const KernelTable& k = simd::active_kernels();
  const std::size_t n = passes.front().rows();
  const std::size_t dim = passes.front().cols();
  const double inv_s = 1.0 / static_cast<double>(passes.size());
  ScoreSet out{DetectorId::kMcDropout, std::move(population), std::vector<double>(n)};
  std::vector<double> exps(dim), mean(dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (const Matrix& pass : passes) {
      const double sum = shifted_exps(k, pass.row(i), 1.0, exps.data());
      k.axpy(inv_s / sum, exps.data(), mean.data(), dim);
    }
    out.scores[i] = k.max(mean.data(), dim);
  }
  return out;
}

ScoreSet mutual_information_score(std::span<const Matrix> passes, std::string population) {
  require_passes(passes);
  const KernelTable& k = simd::active_kernels();
  const std::size_t n = passes.front().rows();
  const std::size_t dim = passes.front().cols();
  const double inv_s = 1.0 / static_cast<double>(passes.size());
  ScoreSet out{DetectorId::kMutualInformation, std::move(population), std::vector<double>(n)};
  std::vector<double> exps(dim), shifted(dim), mean(dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    double mean_entropy = 0.0;
    for (const Matrix& pass : passes) {
      double sum = 0.0;
      mean_entropy += row_entropy(k, pass.row(i), exps.data(), shifted.data(), &sum);
      k.axpy(inv_s / sum, exps.data(), mean.data(), dim);
    }
    mean_entropy *= inv_s;
    const double predictive_entropy = -k.xlogx_sum(mean.data(), dim);
    const double mi = predictive_entropy - mean_entropy;
    out.scores[i] = mi > 0.0 ? -mi : 0.0;
  }
  return out;
}

}  // namespace oodbench

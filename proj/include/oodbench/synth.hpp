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

#ifndef OODBENCH_SYNTH_HPP_
#define OODBENCH_SYNTH_HPP_

// Synthetic inputs with known detection difficulty.
//
// ID logits for class c are separation * e_c + N(0, noise^2 I). An OOD set
// with shift delta uses the same process with the anchor pulled back to
// (separation - delta) * e_c, so delta = 0 reproduces the ID distribution and
// a large delta drives every detector toward perfect separation. MC passes
// add independent N(0, mc_noise^2) noise to each pass of each sample.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "oodbench/metrics.hpp"
#include "oodbench/robustness.hpp"
#include "oodbench/run_store.hpp"

namespace oodbench {

struct OodShift {
  std::string name;
  double delta = 0.0;
};

struct SynthSpec {
  std::string id_dataset = "synthetic";
  std::size_t num_classes = 10;
  std::size_t n_train_per_class = 100;
  std::size_t n_id = 800;
  std::size_t n_ood = 500;
  double separation = 8.0;
  double noise = 1.0;
  std::vector<OodShift> ood_sets = {{"near", 4.0}, {"far", 12.0}};
  std::vector<std::string> optimizers = {"adam", "sgd", "rmsprop"};
  std::uint32_t seeds_per_optimizer = 3;
  std::uint32_t mc_passes = 6;
  double mc_noise = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t balance_seed = 0;

  /// Throws kInvalidInput: K >= 2, sizes >= 10, noise > 0, names valid.
  void check() const;
};

/// JSON object whose keys mirror SynthSpec's fields; absent keys keep their
/// defaults, unknown keys are rejected. "ood_sets" is a list of
/// {"name": ..., "delta": ...} objects.
SynthSpec parse_synth_spec(std::string_view json_text);

struct SynthFixture {
  Manifest manifest;
  std::vector<RunRecord> runs;
};

/// Deterministic given `spec`: each run draws from its own stream derived from
/// (seed, optimizer index, model seed).
SynthFixture generate_gaussian_fixture(const SynthSpec& spec);

void write_fixture(const fs::path& root, const SynthFixture& fixture);

/// 1-D scores: ID ~ N(mu_id, sigma_id^2), OOD ~ N(mu_ood, sigma_ood^2).
EvaluationPair generate_gaussian_scores(double mu_id, double sigma_id, double mu_ood,
                                        double sigma_ood, std::size_t n_id, std::size_t n_ood,
                                        std::uint64_t seed);

/// 100 * Phi((mu_id - mu_ood) / sqrt(sigma_id^2 + sigma_ood^2)).
double analytic_auroc(double mu_id, double sigma_id, double mu_ood, double sigma_ood);

/// Published per-seed and per-group results as metric samples. Two ID
/// namespaces keep the two comparisons apart: "MNIST" holds the detector
/// comparison on F-MNIST over seven optimizers, "MNIST:ood-sweep" holds the
/// max-softmax optimizer comparison over four OOD sets. Groups published only
/// as (mean, variance) are expanded into five pseudo-seeds with exactly those
/// population moments.
MetricSampleTable generate_paper_tables_fixture();

inline constexpr std::string_view kPaperDetectorNamespace = "MNIST";
inline constexpr std::string_view kPaperOodSweepNamespace = "MNIST:ood-sweep";

/// Five values in [0, 100] whose population mean and variance are exactly
/// (mean, variance) up to rounding.
std::vector<double> pseudo_seeds(double mean, double variance);

}  // namespace oodbench

#endif  // OODBENCH_SYNTH_HPP_

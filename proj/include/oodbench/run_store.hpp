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

#ifndef OODBENCH_RUN_STORE_HPP_
#define OODBENCH_RUN_STORE_HPP_

// On-disk exchange formats.
//
// Run tree (written by the synthetic generator or an external training harness):
//
//   <root>/manifest.json
//   <root>/<optimizer>/<seed>/train_logits.csv      header c0..c{K-1}
//   <root>/<optimizer>/<seed>/train_labels.csv      one integer per line
//   <root>/<optimizer>/<seed>/id_test_logits.csv
//   <root>/<optimizer>/<seed>/id_test_labels.csv    optional
//   <root>/<optimizer>/<seed>/ood/<ood>_logits.csv
//   <root>/<optimizer>/<seed>/mc/<population>/pass_<s>.csv   s in 0..S-1
//
// Seeds are 1-based directory names. Numbers are written with 17 significant
// digits so every finite double survives a write/read round trip.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodbench/detectors.hpp"
#include "oodbench/matrix.hpp"
#include "oodbench/robustness.hpp"
#include "oodbench/types.hpp"

namespace oodbench {

namespace fs = std::filesystem;

struct Manifest {
  std::string format_version = "1";
  std::string id_dataset;
  std::size_t num_classes = 0;
  std::vector<std::string> optimizers;
  std::uint32_t seeds_per_optimizer = 1;
  std::vector<std::string> ood_datasets;
  std::uint32_t mc_passes = 0;
  std::uint64_t balance_seed = 0;

  void check() const;
  bool operator==(const Manifest&) const = default;
};

Manifest read_manifest(const fs::path& root);
void write_manifest(const fs::path& root, const Manifest& manifest);

struct RunTree {
  Manifest manifest;
  std::vector<RunRecord> runs;  // manifest order: optimizer-major, then seed
};

/// Missing files raise kLoad naming the path relative to `root`; shape
/// problems raise kFormat; unparsable cells raise kParse with row and column.
/// Train data is optional at load time (only the Gaussian fit needs it).
RunTree load_run_tree(const fs::path& root);

void write_run_tree(const fs::path& root, const Manifest& manifest,
                    std::span<const RunRecord> runs);

fs::path run_directory(const fs::path& root, const RunKey& key);

// --- CSV primitives ---------------------------------------------------------

std::string format_double(double value);

/// `expected_cols` == 0 accepts whatever the header declares.
Matrix read_matrix_csv(const fs::path& path, std::size_t expected_cols = 0);
void write_matrix_csv(const fs::path& path, const Matrix& matrix);
std::vector<int> read_labels_csv(const fs::path& path);
void write_labels_csv(const fs::path& path, std::span<const int> labels);

/// Writes via a sibling temp file and a rename.
void write_file_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

// --- Scores -----------------------------------------------------------------

void write_scores(const fs::path& path, const ScoreSet& scores);
ScoreSet read_scores(const fs::path& path, DetectorId detector, std::string population);

// --- Metrics / samples -------------------------------------------------------

struct MetricRow {
  SampleKey key;
  std::uint64_t balance_seed = 0;
  MetricVector metrics;
};

inline constexpr std::string_view kMetricsHeader =
    "id_dataset,ood_dataset,detector,optimizer,seed,balance_seed,fpr_at_95tpr,"
    "detection_error,auroc,aupr_in,aupr_out";
inline constexpr std::string_view kSamplesHeader =
    "id_dataset,ood_dataset,detector,optimizer,seed,metric,value";

/// Wide layout, one MetricVector per line.
void write_metrics(const fs::path& path, std::span<const MetricRow> rows);

/// Long metrics-only layout, one (key, metric, value) per line.
void write_samples(const fs::path& path, const MetricSampleTable& table);

/// Accepts either the long samples layout or the wide metrics layout, chosen by header.
MetricSampleTable load_samples(const fs::path& path);

// --- Aggregates ----------------------------------------------------------------

inline constexpr std::string_view kAggregatesHeader =
    "conditioning,id_dataset,ood_dataset,detector,optimizer,kind,member,metric,orientation,"
    "mean,variance,weight,score";

/// One line of the aggregates file: a member of a mixture (kind "member") or
/// the mixture itself with its robustness score (kind "mixture").
struct AggregateRow {
  Conditioning conditioning = Conditioning::kZeta;
  std::string id_dataset;
  std::string ood_dataset;
  DetectorId detector = DetectorId::kMaxSoftmax;
  std::string optimizer;
  bool is_mixture = false;
  std::string member;
  MetricId metric = MetricId::kAuroc;
  Orientation orientation = Orientation::kHigherBetter;
  MomentPair moments;
  std::optional<double> weight;
  std::optional<double> score;
};

std::vector<AggregateRow> to_rows(std::span<const ConditionResult> results);
void write_aggregates(const fs::path& path, std::span<const ConditionResult> results);
std::vector<AggregateRow> read_aggregates(const fs::path& path);

}  // namespace oodbench

#endif  // OODBENCH_RUN_STORE_HPP_

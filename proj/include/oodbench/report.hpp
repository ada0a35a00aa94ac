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

#ifndef OODBENCH_REPORT_HPP_
#define OODBENCH_REPORT_HPP_

// Human-facing rendering of aggregates. Markdown output groups conditions
// into tables and bolds the most robust entry of every metric column; CSV
// output is a flat, markup-free listing with an explicit rank.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodbench/run_store.hpp"

namespace oodbench {

/// Fixed-point with `decimals` digits, trailing zeros stripped ("16.5", "0.003").
std::string format_rounded(double value, int decimals = 3);

/// "mean | variance", both rounded to three decimals.
std::string format_moment_cell(const MomentPair& moments);

enum class ReportFormat { kMarkdown, kCsv };

std::optional<ReportFormat> parse_report_format(std::string_view name);

struct TableCell {
  std::string text;
  bool best = false;
};

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<TableCell>> rows;
};

/// Metric columns in report order: FPR, detection error, AUROC, AUPR-Out, AUPR-In.
inline constexpr std::array<MetricId, 5> kReportMetricOrder = {
    MetricId::kFprAt95Tpr, MetricId::kDetectionError, MetricId::kAuroc,
    MetricId::kAuprOut,    MetricId::kAuprIn,
};

/// Zeta aggregates yield, per (ID, OOD): one member table per detector, a
/// mixture-moment table and a score table over detectors. Xi aggregates
/// yield, per (ID, detector): one member table per optimizer, a
/// mixture-moment table and a score table over optimizers.
std::vector<Table> build_tables(std::span<const AggregateRow> rows);

std::string render_markdown(std::span<const Table> tables);

inline constexpr std::string_view kReportCsvHeader =
    "conditioning,id_dataset,ood_dataset,detector,optimizer,metric,orientation,mean,variance,"
    "score,rank";

/// One line per mixture row. Rank 1 is the most robust condition among those
/// compared in the same score table.
std::string render_csv(std::span<const AggregateRow> rows);

/// Throws kInvalidInput when `rows` is empty, kIo when the path is unwritable.
void write_table(const fs::path& path, std::span<const AggregateRow> rows, ReportFormat format);

}  // namespace oodbench

#endif  // OODBENCH_REPORT_HPP_

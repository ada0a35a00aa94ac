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

#include "oodbench/report.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "oodbench/error.hpp"

namespace oodbench {
namespace {

// One aggregated condition as read back from the aggregates file.
struct Condition {
  std::string row_name;  // detector (zeta) or optimizer (xi)
  std::string label;     // used for tie-breaking in the ranking
  std::vector<std::string> members;
  std::map<MetricId, const AggregateRow*> mixture;
  std::map<std::pair<std::string, MetricId>, MomentPair> member_moments;
};

// Conditions that are compared in one score table.
struct Group {
  Conditioning conditioning = Conditioning::kZeta;
  std::string title;
  std::vector<Condition> conditions;
};

std::string condition_id(Conditioning conditioning, const std::string& label) {
  return fmt::format("{}|{}", to_string(conditioning), label);
}

std::vector<Group> collect(std::span<const AggregateRow> rows) {
  std::vector<Group> groups;
  std::map<std::string, std::size_t> group_index;
  std::map<std::string, std::pair<std::size_t, std::size_t>> condition_index;
  for (const AggregateRow& r : rows) {
    const bool zeta = r.conditioning == Conditioning::kZeta;
    const std::string group_key =
        fmt::format("{}|{}|{}", to_string(r.conditioning), r.id_dataset,
                    zeta ? r.ood_dataset : std::string(to_string(r.detector)));
    auto [git, new_group] = group_index.try_emplace(group_key, groups.size());
    if (new_group) {
      Group g;
      g.conditioning = r.conditioning;
      g.title = zeta ? fmt::format("{} vs {}", r.id_dataset, r.ood_dataset)
                     : fmt::format("{}, {}", r.id_dataset, display_name(r.detector));
      groups.push_back(std::move(g));
    }
    Group& group = groups[git->second];
    const std::string label =
        zeta ? oodbench::label(ConditionKeyZeta{r.id_dataset, r.ood_dataset, r.detector})
             : oodbench::label(ConditionKeyXi{r.id_dataset, r.detector, r.optimizer});
    auto [cit, new_condition] =
        condition_index.try_emplace(condition_id(r.conditioning, label),
                                    git->second, group.conditions.size());
    if (new_condition) {
      Condition c;
      c.row_name = zeta ? std::string(display_name(r.detector)) : r.optimizer;
      c.label = label;
      group.conditions.push_back(std::move(c));
    }
    Condition& condition = group.conditions[cit->second.second];
    if (r.is_mixture) {
      if (!r.score) {
        throw Error(ErrorCode::kFormat, fmt::format("mixture row for {} ({}) has no score",
                                                    label, to_string(r.metric)));
      }
      condition.mixture[r.metric] = &r;
    } else {
      if (std::find(condition.members.begin(), condition.members.end(), r.member) ==
          condition.members.end()) {
        condition.members.push_back(r.member);
      }
      condition.member_moments[{r.member, r.metric}] = r.moments;
    }
  }
  for (const Group& g : groups) {
    for (const Condition& c : g.conditions) {
      for (MetricId m : kReportMetricOrder) {
        if (!c.mixture.count(m)) {
          throw Error(ErrorCode::kFormat, fmt::format("condition {} lacks a mixture row for {}",
                                                      c.label, to_string(m)));
        }
      }
    }
  }
  return groups;
}

// Ranked conditions of one group for one metric, most robust first.
std::vector<RobustnessScore> ranked(const Group& group, MetricId metric) {
  std::vector<RobustnessScore> scores;
  for (const Condition& c : group.conditions) {
    const AggregateRow& row = *c.mixture.at(metric);
    scores.push_back({metric, c.label, *row.score, row.orientation});
  }
  return rank_conditions(std::move(scores));
}

std::vector<std::string> metric_header(std::string first) {
  std::vector<std::string> header{std::move(first)};
  for (MetricId m : kReportMetricOrder) header.emplace_back(display_name(m));
  return header;
}

std::string escape_markdown(std::string_view text) {
  std::string out;
  for (char ch : text) {
    if (ch == '|') out += '\\';
    out += ch;
  }
  return out;
}

}  // namespace

std::string format_rounded(double value, int decimals) {
  std::string text = fmt::format("{:.{}f}", value, decimals);
  if (text.find('.') != std::string::npos) {
    while (text.back() == '0') text.pop_back();
    if (text.back() == '.') text.pop_back();
  }
  if (text == "-0") text = "0";
  return text;
}

std::string format_moment_cell(const MomentPair& moments) {
  return format_rounded(moments.mean) + " | " + format_rounded(moments.variance);
}

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "md") return ReportFormat::kMarkdown;
  if (name == "csv") return ReportFormat::kCsv;
  return std::nullopt;
}

std::vector<Table> build_tables(std::span<const AggregateRow> rows) {
  std::vector<Table> tables;
  for (const Group& group : collect(rows)) {
    const bool zeta = group.conditioning == Conditioning::kZeta;
    const char* row_kind = zeta ? "Detector" : "Optimizer";

    for (const Condition& c : group.conditions) {
      Table t;
      t.title = zeta ? fmt::format("{}: {} across optimizers", group.title, c.row_name)
                     : fmt::format("{}, {}: across OOD sets", group.title, c.row_name);
      t.header = metric_header(zeta ? "Optimizer" : "OOD set");
      for (const std::string& member : c.members) {
        std::vector<TableCell> cells{{member}};
        for (MetricId m : kReportMetricOrder) {
          auto it = c.member_moments.find({member, m});
          cells.push_back({it == c.member_moments.end() ? "" : format_moment_cell(it->second)});
        }
        t.rows.push_back(std::move(cells));
      }
      std::vector<TableCell> mixture{{"Mixture"}};
      for (MetricId m : kReportMetricOrder) {
        mixture.push_back({format_moment_cell(c.mixture.at(m)->moments)});
      }
      t.rows.push_back(std::move(mixture));
      tables.push_back(std::move(t));
    }

    Table moments;
    moments.title = fmt::format("{}: mixture moments by {}", group.title, zeta ? "detector" : "optimizer");
    moments.header = metric_header(row_kind);
    Table scores;
    scores.title = fmt::format("{}: robustness scores by {} (lower is more robust)", group.title,
                               zeta ? "detector" : "optimizer");
    scores.header = metric_header(row_kind);
    for (const Condition& c : group.conditions) {
      std::vector<TableCell> moment_cells{{c.row_name}};
      std::vector<TableCell> score_cells{{c.row_name}};
      for (MetricId m : kReportMetricOrder) {
        const AggregateRow& row = *c.mixture.at(m);
        moment_cells.push_back({format_moment_cell(row.moments)});
        score_cells.push_back({format_rounded(*row.score)});
      }
      moments.rows.push_back(std::move(moment_cells));
      scores.rows.push_back(std::move(score_cells));
    }
    for (std::size_t col = 0; col < kReportMetricOrder.size(); ++col) {
      const std::string winner = ranked(group, kReportMetricOrder[col]).front().condition;
      for (std::size_t r = 0; r < group.conditions.size(); ++r) {
        if (group.conditions[r].label == winner) scores.rows[r][col + 1].best = true;
      }
    }
    tables.push_back(std::move(moments));
    tables.push_back(std::move(scores));
  }
  return tables;
}

std::string render_markdown(std::span<const Table> tables) {
  std::string out = "# Optimizer robustness report\n";
  for (const Table& t : tables) {
    out += fmt::format("\n## {}\n\n|", t.title);
    for (const std::string& h : t.header) out += " " + escape_markdown(h) + " |";
    out += "\n|";
    for (std::size_t c = 0; c < t.header.size(); ++c) out += c == 0 ? " --- |" : " ---: |";
    out += '\n';
    for (const auto& row : t.rows) {
      out += '|';
      for (const TableCell& cell : row) {
        const std::string text = escape_markdown(cell.text);
        out += cell.best ? " **" + text + "** |" : " " + text + " |";
      }
      out += '\n';
    }
  }
  return out;
}

std::string render_csv(std::span<const AggregateRow> rows) {
  std::map<std::pair<std::string, MetricId>, std::size_t> rank_of;
  for (const Group& group : collect(rows)) {
    for (MetricId m : kReportMetricOrder) {
      const auto order = ranked(group, m);
      for (std::size_t i = 0; i < order.size(); ++i) {
        rank_of[{condition_id(group.conditioning, order[i].condition), m}] = i + 1;
      }
    }
  }
  std::string out(kReportCsvHeader);
  out += '\n';
  for (const AggregateRow& r : rows) {
    if (!r.is_mixture) continue;
    const std::string label =
        r.conditioning == Conditioning::kZeta
            ? oodbench::label(ConditionKeyZeta{r.id_dataset, r.ood_dataset, r.detector})
            : oodbench::label(ConditionKeyXi{r.id_dataset, r.detector, r.optimizer});
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.conditioning),
                       r.id_dataset, r.ood_dataset, to_string(r.detector), r.optimizer,
                       to_string(r.metric), to_string(r.orientation), format_double(r.moments.mean),
                       format_double(r.moments.variance), format_double(*r.score),
                       rank_of.at({condition_id(r.conditioning, label), r.metric}));
  }
  return out;
}

void write_table(const fs::path& path, std::span<const AggregateRow> rows, ReportFormat format) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidInput, "no aggregate rows to report");
  if (format == ReportFormat::kCsv) {
    write_file_atomic(path, render_csv(rows));
  } else {
    const auto tables = build_tables(rows);
    write_file_atomic(path, render_markdown(tables));
  }
}

}  // namespace oodbench

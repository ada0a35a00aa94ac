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

#include "oodbench/run_store.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "oodbench/error.hpp"
#include "oodbench/parallel.hpp"

namespace oodbench {
namespace {

using nlohmann::json;

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(',', start);
    if (end == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

double parse_cell(std::string_view cell, const fs::path& path, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kParse, fmt::format("{}: row {}, column {}: '{}' is not a number",
                                               path.string(), row, col, cell));
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view cell, const fs::path& path, std::size_t row, std::size_t col) {
  Int value{};
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kParse, fmt::format("{}: row {}, column {}: '{}' is not an integer",
                                               path.string(), row, col, cell));
  }
  return value;
}

std::string matrix_header(std::size_t cols) {
  std::string header;
  for (std::size_t c = 0; c < cols; ++c) {
    if (c) header += ',';
    header += fmt::format("c{}", c);
  }
  return header;
}

std::string relative_name(const fs::path& root, const fs::path& path) {
  return path.lexically_relative(root).generic_string();
}

// Required file: missing -> kLoad naming the path relative to the tree root.
fs::path require_file(const fs::path& root, const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kLoad, fmt::format("missing file {} (under {})",
                                              relative_name(root, path), root.string()));
  }
  return path;
}

std::vector<std::string> string_list(const json& j, const char* field) {
  std::vector<std::string> out;
  for (const auto& item : j.at(field)) out.push_back(item.get<std::string>());
  return out;
}

RunRecord load_run(const fs::path& root, const Manifest& manifest, const RunKey& key) {
  const fs::path dir = run_directory(root, key);
  const std::size_t k = manifest.num_classes;
  RunRecord record;
  record.key = key;
  record.num_classes = k;
  record.id_test_logits = read_matrix_csv(require_file(root, dir / "id_test_logits.csv"), k);
  if (fs::is_regular_file(dir / "id_test_labels.csv")) {
    record.id_test_labels = read_labels_csv(dir / "id_test_labels.csv");
  }
  if (fs::is_regular_file(dir / "train_logits.csv")) {
    record.train_logits = read_matrix_csv(dir / "train_logits.csv", k);
  }
  if (fs::is_regular_file(dir / "train_labels.csv")) {
    record.train_labels = read_labels_csv(dir / "train_labels.csv");
  }
  for (const std::string& ood : manifest.ood_datasets) {
    record.ood_logits.emplace(
        ood, read_matrix_csv(require_file(root, dir / "ood" / (ood + "_logits.csv")), k));
  }
  if (manifest.mc_passes > 0) {
    std::vector<std::string> populations{std::string(kIdTestPopulation)};
    populations.insert(populations.end(), manifest.ood_datasets.begin(),
                       manifest.ood_datasets.end());
    for (const std::string& population : populations) {
      auto& passes = record.mc_passes[population];
      for (std::uint32_t s = 0; s < manifest.mc_passes; ++s) {
        const fs::path file = dir / "mc" / population / fmt::format("pass_{}.csv", s);
        passes.push_back(read_matrix_csv(require_file(root, file), k));
      }
    }
  }
  const auto violations = validate_run(record);
  if (!violations.empty()) {
    std::string message = fmt::format("run {} is invalid:", relative_name(root, dir));
    for (const auto& v : violations) message += fmt::format(" [{}: {}]", v.field, v.rule);
    throw Error(ErrorCode::kFormat, message);
  }
  return record;
}

std::vector<std::string> header_cells(std::string_view line) {
  std::vector<std::string> out;
  for (auto cell : split_cells(line)) out.emplace_back(cell);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void Manifest::check() const {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kFormat, "manifest: " + why);
  };
  if (format_version != "1") fail(fmt::format("unsupported format_version '{}'", format_version));
  if (id_dataset.empty()) fail("id_dataset is empty");
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (optimizers.empty()) fail("optimizers is empty");
  if (ood_datasets.empty()) fail("ood_datasets is empty");
  if (seeds_per_optimizer < 1) fail("seeds_per_optimizer must be >= 1");
  std::set<std::string> seen;
  for (const auto& name : optimizers) {
    if (name.empty() || name.find_first_of("/,\\") != std::string::npos ||
        !seen.insert(name).second) {
      fail(fmt::format("bad or duplicate optimizer name '{}'", name));
    }
  }
  seen.clear();
  for (const auto& name : ood_datasets) {
    if (name.empty() || name == kIdTestPopulation ||
        name.find_first_of("/,\\") != std::string::npos || !seen.insert(name).second) {
      fail(fmt::format("bad or duplicate OOD dataset name '{}'", name));
    }
  }
}

Manifest read_manifest(const fs::path& root) {
  const fs::path path = root / "manifest.json";
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kLoad, fmt::format("missing file {}", path.string()));
  }
  Manifest m;
  try {
    const json j = json::parse(read_file(path));
    m.format_version = j.at("format_version").get<std::string>();
    m.id_dataset = j.at("id_dataset").get<std::string>();
    m.num_classes = j.at("num_classes").get<std::size_t>();
    m.optimizers = string_list(j, "optimizers");
    m.seeds_per_optimizer = j.at("seeds_per_optimizer").get<std::uint32_t>();
    m.ood_datasets = string_list(j, "ood_datasets");
    m.mc_passes = j.at("mc_passes").get<std::uint32_t>();
    m.balance_seed = j.at("balance_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, fmt::format("{}: {}", path.string(), e.what()));
  }
  m.check();
  return m;
}

void write_manifest(const fs::path& root, const Manifest& manifest) {
  manifest.check();
  json j;
  j["format_version"] = manifest.format_version;
  j["id_dataset"] = manifest.id_dataset;
  j["num_classes"] = manifest.num_classes;
  j["optimizers"] = manifest.optimizers;
  j["seeds_per_optimizer"] = manifest.seeds_per_optimizer;
  j["ood_datasets"] = manifest.ood_datasets;
  j["mc_passes"] = manifest.mc_passes;
  j["balance_seed"] = manifest.balance_seed;
  fs::create_directories(root);
  write_file_atomic(root / "manifest.json", j.dump(2) + "\n");
}

fs::path run_directory(const fs::path& root, const RunKey& key) {
  return root / key.optimizer / std::to_string(key.seed);
}

RunTree load_run_tree(const fs::path& root) {
  RunTree tree;
  tree.manifest = read_manifest(root);
  std::vector<RunKey> keys;
  for (const auto& optimizer : tree.manifest.optimizers) {
    for (std::uint32_t j = 1; j <= tree.manifest.seeds_per_optimizer; ++j) {
      keys.push_back({tree.manifest.id_dataset, optimizer, j});
    }
  }
  tree.runs.resize(keys.size());
  parallel_for(keys.size(), [&](std::size_t i) {
    tree.runs[i] = load_run(root, tree.manifest, keys[i]);
  });
  return tree;
}

void write_run_tree(const fs::path& root, const Manifest& manifest,
                    std::span<const RunRecord> runs) {
  write_manifest(root, manifest);
  for (const RunRecord& r : runs) {
    const fs::path dir = run_directory(root, r.key);
    fs::create_directories(dir / "ood");
    if (r.train_logits) write_matrix_csv(dir / "train_logits.csv", *r.train_logits);
    if (r.train_labels) write_labels_csv(dir / "train_labels.csv", *r.train_labels);
    write_matrix_csv(dir / "id_test_logits.csv", r.id_test_logits);
    if (r.id_test_labels) write_labels_csv(dir / "id_test_labels.csv", *r.id_test_labels);
    for (const auto& [name, logits] : r.ood_logits) {
      write_matrix_csv(dir / "ood" / (name + "_logits.csv"), logits);
    }
    for (const auto& [population, passes] : r.mc_passes) {
      fs::create_directories(dir / "mc" / population);
      for (std::size_t s = 0; s < passes.size(); ++s) {
        write_matrix_csv(dir / "mc" / population / fmt::format("pass_{}.csv", s), passes[s]);
      }
    }
  }
}

// ---------------------------------------------------------------------------

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kLoad, fmt::format("cannot open {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kIo, fmt::format("write to {} failed", path.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, fmt::format("cannot rename into {}: {}", path.string(),
                                            ec.message()));
  }
}

Matrix read_matrix_csv(const fs::path& path, std::size_t expected_cols) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::kFormat, fmt::format("{}: empty file", path.string()));
  const std::size_t cols = split_cells(lines[0]).size();
  if (lines[0] != matrix_header(cols)) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: header must be c0..c{}", path.string(), cols - 1));
  }
  if (expected_cols != 0 && cols != expected_cols) {
    throw Error(ErrorCode::kFormat, fmt::format("{}: {} columns, expected K = {}", path.string(),
                                                cols, expected_cols));
  }
  std::vector<double> data;
  data.reserve((lines.size() - 1) * cols);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_cells(lines[r]);
    if (cells.size() != cols) {
      throw Error(ErrorCode::kFormat, fmt::format("{}: row {} has {} cells, expected {}",
                                                  path.string(), r + 1, cells.size(), cols));
    }
    for (std::size_t c = 0; c < cols; ++c) data.push_back(parse_cell(cells[c], path, r + 1, c + 1));
  }
  return Matrix(lines.size() - 1, cols, std::move(data));
}

void write_matrix_csv(const fs::path& path, const Matrix& matrix) {
  std::string out = matrix_header(matrix.cols());
  out += '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    auto row = matrix.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<int> read_labels_csv(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<int> labels;
  const auto lines = split_lines(text);
  labels.reserve(lines.size());
  for (std::size_t r = 0; r < lines.size(); ++r) {
    labels.push_back(parse_int<int>(lines[r], path, r + 1, 1));
  }
  return labels;
}

void write_labels_csv(const fs::path& path, std::span<const int> labels) {
  std::string out;
  for (int label : labels) out += fmt::format("{}\n", label);
  write_file_atomic(path, out);
}

void write_scores(const fs::path& path, const ScoreSet& scores) {
  std::string out = "score\n";
  for (double s : scores.scores) {
    out += format_double(s);
    out += '\n';
  }
  write_file_atomic(path, out);
}

ScoreSet read_scores(const fs::path& path, DetectorId detector, std::string population) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "score") {
    throw Error(ErrorCode::kFormat, fmt::format("{}: header must be 'score'", path.string()));
  }
  ScoreSet out{detector, std::move(population), {}};
  out.scores.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const double v = parse_cell(lines[r], path, r + 1, 1);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kFormat, fmt::format("{}: row {}: non-finite score",
                                                  path.string(), r + 1));
    }
    out.scores.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_metrics(const fs::path& path, std::span<const MetricRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidInput, "no metric rows to write");
  std::string out(kMetricsHeader);
  out += '\n';
  for (const MetricRow& r : rows) {
    out += fmt::format("{},{},{},{},{},{}", r.key.id_dataset, r.key.ood_dataset,
                       to_string(r.key.detector), r.key.optimizer, r.key.seed, r.balance_seed);
    for (MetricId m : kAllMetrics) out += "," + format_double(r.metrics.get(m));
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_samples(const fs::path& path, const MetricSampleTable& table) {
  if (table.size() == 0) throw Error(ErrorCode::kInvalidInput, "no samples to write");
  std::string out(kSamplesHeader);
  out += '\n';
  // Input order: ID datasets, then OOD sets, detectors, optimizers as first seen.
  for (const auto& id : table.id_datasets()) {
    for (const auto& ood : table.ood_datasets(id)) {
      for (DetectorId det : table.detectors(id)) {
        for (const auto& opt : table.optimizers(id)) {
          const SampleKey first{id, ood, det, opt, 0};
          for (auto it = table.entries().lower_bound(first); it != table.entries().end(); ++it) {
            const SampleKey& k = it->first;
            if (k.id_dataset != id || k.ood_dataset != ood || k.detector != det ||
                k.optimizer != opt) {
              break;
            }
            for (MetricId m : kAllMetrics) {
              out += fmt::format("{},{},{},{},{},{},{}\n", id, ood, to_string(det), opt, k.seed,
                                 to_string(m), format_double(it->second.get(m)));
            }
          }
        }
      }
    }
  }
  write_file_atomic(path, out);
}

MetricSampleTable load_samples(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kLoad, fmt::format("missing file {}", path.string()));
  }
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::kFormat, fmt::format("{}: empty file", path.string()));
  const bool wide = lines[0] == kMetricsHeader;
  if (!wide && lines[0] != kSamplesHeader) {
    throw Error(ErrorCode::kFormat,
                fmt::format("{}: unrecognized header; expected '{}' or '{}'", path.string(),
                            kSamplesHeader, kMetricsHeader));
  }
  const std::size_t expected = header_cells(lines[0]).size();

  auto parse_key = [&](const std::vector<std::string_view>& cells, std::size_t row) {
    SampleKey key;
    key.id_dataset = std::string(cells[0]);
    key.ood_dataset = std::string(cells[1]);
    const auto det = parse_detector(cells[2]);
    if (!det) {
      throw Error(ErrorCode::kParse, fmt::format("{}: row {}, column 3: unknown detector '{}'",
                                                 path.string(), row, cells[2]));
    }
    key.detector = *det;
    key.optimizer = std::string(cells[3]);
    key.seed = parse_int<std::uint32_t>(cells[4], path, row, 5);
    return key;
  };

  MetricSampleTable table;
  if (wide) {
    for (std::size_t r = 1; r < lines.size(); ++r) {
      const auto cells = split_cells(lines[r]);
      if (cells.size() != expected) {
        throw Error(ErrorCode::kFormat, fmt::format("{}: row {} has {} cells, expected {}",
                                                    path.string(), r + 1, cells.size(), expected));
      }
      MetricVector mv;
      for (std::size_t m = 0; m < kAllMetrics.size(); ++m) {
        mv.set(kAllMetrics[m], parse_cell(cells[6 + m], path, r + 1, 7 + m));
      }
      table.add(parse_key(cells, r + 1), mv);
    }
    return table;
  }

  // Long layout: gather all five metrics per key, keeping first-seen key order.
  std::vector<SampleKey> order;
  std::map<SampleKey, std::pair<MetricVector, unsigned>> partial;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_cells(lines[r]);
    if (cells.size() != expected) {
      throw Error(ErrorCode::kFormat, fmt::format("{}: row {} has {} cells, expected {}",
                                                  path.string(), r + 1, cells.size(), expected));
    }
    const SampleKey key = parse_key(cells, r + 1);
    const auto metric = parse_metric(cells[5]);
    if (!metric) {
      throw Error(ErrorCode::kParse, fmt::format("{}: row {}, column 6: unknown metric '{}'",
                                                 path.string(), r + 1, cells[5]));
    }
    auto [it, inserted] = partial.try_emplace(key);
    if (inserted) order.push_back(key);
    const unsigned bit = 1u << static_cast<unsigned>(*metric);
    if (it->second.second & bit) {
      throw Error(ErrorCode::kFormat, fmt::format("{}: row {}: {} given twice for this key",
                                                  path.string(), r + 1, cells[5]));
    }
    it->second.second |= bit;
    it->second.first.set(*metric, parse_cell(cells[6], path, r + 1, 7));
  }
  for (const SampleKey& key : order) {
    const auto& [mv, mask] = partial.at(key);
    if (mask != (1u << kAllMetrics.size()) - 1) {
      throw Error(ErrorCode::kFormat,
                  fmt::format("{}: ({}, {}, {}, {}, seed {}) lacks some of the five metrics",
                              path.string(), key.id_dataset, key.ood_dataset,
                              to_string(key.detector), key.optimizer, key.seed));
    }
    table.add(key, mv);
  }
  return table;
}

// ---------------------------------------------------------------------------

std::vector<AggregateRow> to_rows(std::span<const ConditionResult> results) {
  std::vector<AggregateRow> rows;
  for (const ConditionResult& c : results) {
    for (const MetricAggregate& agg : c.metrics) {
      AggregateRow base;
      base.conditioning = c.conditioning;
      base.id_dataset = c.id_dataset;
      base.ood_dataset = c.ood_dataset;
      base.detector = c.detector;
      base.optimizer = c.optimizer;
      base.metric = agg.metric;
      base.orientation = agg.score.orientation;
      for (std::size_t m = 0; m < agg.members.size(); ++m) {
        AggregateRow row = base;
        row.member = agg.members[m];
        row.moments = agg.member_moments[m];
        row.weight = agg.weights.weights[m];
        rows.push_back(std::move(row));
      }
      AggregateRow mix = base;
      mix.is_mixture = true;
      mix.moments = agg.mixture;
      mix.score = agg.score.value;
      rows.push_back(std::move(mix));
    }
  }
  return rows;
}

void write_aggregates(const fs::path& path, std::span<const ConditionResult> results) {
  if (results.empty()) throw Error(ErrorCode::kInvalidInput, "no aggregates to write");
  std::string out(kAggregatesHeader);
  out += '\n';
  for (const AggregateRow& r : to_rows(results)) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.conditioning),
                       r.id_dataset, r.ood_dataset, to_string(r.detector), r.optimizer,
                       r.is_mixture ? "mixture" : "member", r.member, to_string(r.metric),
                       to_string(r.orientation), format_double(r.moments.mean),
                       format_double(r.moments.variance),
                       r.weight ? format_double(*r.weight) : "",
                       r.score ? format_double(*r.score) : "");
  }
  write_file_atomic(path, out);
}

std::vector<AggregateRow> read_aggregates(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kLoad, fmt::format("missing file {}", path.string()));
  }
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kAggregatesHeader) {
    throw Error(ErrorCode::kFormat, fmt::format("{}: header must be '{}'", path.string(),
                                                kAggregatesHeader));
  }
  const std::size_t expected = header_cells(lines[0]).size();
  std::vector<AggregateRow> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_cells(lines[r]);
    const std::size_t row_no = r + 1;
    if (cells.size() != expected) {
      throw Error(ErrorCode::kFormat, fmt::format("{}: row {} has {} cells, expected {}",
                                                  path.string(), row_no, cells.size(), expected));
    }
    auto bad = [&](std::size_t col, std::string_view what) {
      return Error(ErrorCode::kParse, fmt::format("{}: row {}, column {}: bad {} '{}'",
                                                  path.string(), row_no, col, what,
                                                  cells[col - 1]));
    };
    AggregateRow row;
    if (cells[0] == "zeta") {
      row.conditioning = Conditioning::kZeta;
    } else if (cells[0] == "xi") {
      row.conditioning = Conditioning::kXi;
    } else {
      throw bad(1, "conditioning");
    }
    row.id_dataset = std::string(cells[1]);
    row.ood_dataset = std::string(cells[2]);
    const auto det = parse_detector(cells[3]);
    if (!det) throw bad(4, "detector");
    row.detector = *det;
    row.optimizer = std::string(cells[4]);
    if (cells[5] != "member" && cells[5] != "mixture") throw bad(6, "kind");
    row.is_mixture = cells[5] == "mixture";
    row.member = std::string(cells[6]);
    const auto metric = parse_metric(cells[7]);
    if (!metric) throw bad(8, "metric");
    row.metric = *metric;
    const auto orientation = parse_orientation(cells[8]);
    if (!orientation) throw bad(9, "orientation");
    row.orientation = *orientation;
    row.moments.mean = parse_cell(cells[9], path, row_no, 10);
    row.moments.variance = parse_cell(cells[10], path, row_no, 11);
    if (!cells[11].empty()) row.weight = parse_cell(cells[11], path, row_no, 12);
    if (!cells[12].empty()) row.score = parse_cell(cells[12], path, row_no, 13);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace oodbench

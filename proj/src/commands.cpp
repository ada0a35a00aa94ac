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

#include "oodbench/commands.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "oodbench/error.hpp"
#include "oodbench/metrics.hpp"
#include "oodbench/parallel.hpp"
#include "oodbench/run_store.hpp"
#include "oodbench/synth.hpp"

namespace oodbench {
namespace {

using nlohmann::json;

struct ScoreIndex {
  std::string id_dataset;
  std::vector<std::string> optimizers;
  std::uint32_t seeds_per_optimizer = 1;
  std::vector<std::string> ood_datasets;
  std::vector<DetectorId> detectors;
};

fs::path score_path(const fs::path& root, const std::string& optimizer, std::uint32_t seed,
                    const std::string& population, DetectorId detector) {
  return root / optimizer / std::to_string(seed) / population /
         (std::string(to_string(detector)) + ".csv");
}

void write_index(const fs::path& root, const ScoreIndex& index) {
  json j;
  j["format_version"] = "1";
  j["id_dataset"] = index.id_dataset;
  j["optimizers"] = index.optimizers;
  j["seeds_per_optimizer"] = index.seeds_per_optimizer;
  j["ood_datasets"] = index.ood_datasets;
  std::vector<std::string> names;
  for (DetectorId d : index.detectors) names.emplace_back(to_string(d));
  j["detectors"] = names;
  write_file_atomic(root / "index.json", j.dump(2) + "\n");
}

ScoreIndex read_index(const fs::path& root) {
  const fs::path path = root / "index.json";
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kLoad, fmt::format("missing file {}", path.string()));
  }
  ScoreIndex index;
  try {
    const json j = json::parse(read_file(path));
    index.id_dataset = j.at("id_dataset").get<std::string>();
    index.optimizers = j.at("optimizers").get<std::vector<std::string>>();
    index.seeds_per_optimizer = j.at("seeds_per_optimizer").get<std::uint32_t>();
    index.ood_datasets = j.at("ood_datasets").get<std::vector<std::string>>();
    for (const auto& name : j.at("detectors").get<std::vector<std::string>>()) {
      const auto d = parse_detector(name);
      if (!d) throw Error(ErrorCode::kFormat, fmt::format("{}: unknown detector '{}'", path.string(), name));
      index.detectors.push_back(*d);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, fmt::format("{}: {}", path.string(), e.what()));
  }
  return index;
}

// All ScoreSets of one population under the requested detectors.
std::vector<ScoreSet> score_population(const RunRecord& run, const std::string& population,
                                       const Matrix& logits, std::span<const DetectorId> detectors,
                                       const GaussianModel* model, double odin_temperature) {
  std::vector<ScoreSet> out;
  for (DetectorId d : detectors) {
    switch (d) {
      case DetectorId::kMaxSoftmax: out.push_back(max_softmax_score(logits, population)); break;
      case DetectorId::kOdin:
        out.push_back(odin_score(logits, odin_temperature, population));
        break;
      case DetectorId::kMahalanobis:
        out.push_back(mahalanobis_score(*model, logits, population));
        break;
      case DetectorId::kEntropy: out.push_back(entropy_score(logits, population)); break;
      case DetectorId::kMargin: out.push_back(margin_score(logits, population)); break;
      case DetectorId::kMcDropout:
        out.push_back(mc_dropout_score(run.mc_passes.at(population), population));
        break;
      case DetectorId::kMutualInformation:
        out.push_back(mutual_information_score(run.mc_passes.at(population), population));
        break;
    }
  }
  return out;
}

}  // namespace

std::vector<DetectorId> parse_detector_list(std::string_view text) {
  if (text == "all") return {kAllDetectors.begin(), kAllDetectors.end()};
  std::vector<DetectorId> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view name = text.substr(start, end - start);
    const auto d = parse_detector(name);
    if (!d) throw Error(ErrorCode::kInvalidInput, fmt::format("unknown detector '{}'", name));
    if (std::find(out.begin(), out.end(), *d) == out.end()) out.push_back(*d);
    start = end + 1;
  }
  return out;
}

void cmd_score(const ScoreOptions& options, std::ostream& log) {
  if (options.detectors.empty()) throw Error(ErrorCode::kInvalidInput, "no detectors selected");
  if (!(options.odin_temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "--odin-temp must be positive");
  }
  const RunTree tree = load_run_tree(options.run_root);
  const Manifest& manifest = tree.manifest;

  std::vector<DetectorId> detectors;
  for (DetectorId d : options.detectors) {
    if (needs_mc_passes(d) && manifest.mc_passes == 0) {
      log << fmt::format("warning: skipping {}: the run tree has no MC passes\n", to_string(d));
      continue;
    }
    detectors.push_back(d);
  }
  if (detectors.empty()) throw Error(ErrorCode::kInvalidInput, "every selected detector was skipped");
  const bool needs_fit =
      std::find(detectors.begin(), detectors.end(), DetectorId::kMahalanobis) != detectors.end();

  if (needs_fit) {
    for (const RunRecord& run : tree.runs) {
      const fs::path dir = run_directory(options.run_root, run.key);
      for (const char* file : {"train_logits.csv", "train_labels.csv"}) {
        if (!fs::is_regular_file(dir / file)) {
          throw Error(ErrorCode::kLoad,
                      fmt::format("md needs train data: missing file {}/{}/{}",
                                  run.key.optimizer, run.key.seed, file));
        }
      }
      const auto violations = validate_run(run, {.require_gaussian_fit = true});
      if (!violations.empty()) {
        throw Error(ErrorCode::kFit, fmt::format("{}: cannot fit md: {} ({})", to_string(run.key),
                                                 violations.front().field, violations.front().rule));
      }
    }
  }

  std::vector<std::string> populations{std::string(kIdTestPopulation)};
  populations.insert(populations.end(), manifest.ood_datasets.begin(), manifest.ood_datasets.end());

  parallel_for(tree.runs.size(), [&](std::size_t i) {
    const RunRecord& run = tree.runs[i];
    std::optional<GaussianModel> model;
    if (needs_fit) model = fit_gaussian(*run.train_logits, *run.train_labels, run.num_classes);
    for (const std::string& population : populations) {
      const Matrix& logits =
          population == kIdTestPopulation ? run.id_test_logits : run.ood_logits.at(population);
      for (const ScoreSet& s : score_population(run, population, logits, detectors,
                                                model ? &*model : nullptr,
                                                options.odin_temperature)) {
        write_scores(score_path(options.out, run.key.optimizer, run.key.seed, population, s.detector), s);
      }
    }
  });

  write_index(options.out, {manifest.id_dataset, manifest.optimizers, manifest.seeds_per_optimizer,
                            manifest.ood_datasets, detectors});
}

void cmd_eval(const EvalOptions& options, std::ostream& /*log*/) {
  const ScoreIndex index = read_index(options.scores);
  struct Item {
    std::string optimizer;
    std::uint32_t seed;
    std::string ood;
    DetectorId detector;
  };
  std::vector<Item> items;
  for (const auto& optimizer : index.optimizers) {
    for (std::uint32_t seed = 1; seed <= index.seeds_per_optimizer; ++seed) {
      for (const auto& ood : index.ood_datasets) {
        for (DetectorId d : index.detectors) items.push_back({optimizer, seed, ood, d});
      }
    }
  }
  if (items.empty()) throw Error(ErrorCode::kInvalidInput, "the score index lists no work");

  std::vector<MetricRow> rows(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const Item& it = items[i];
    auto load = [&](const std::string& population) {
      const fs::path path = score_path(options.scores, it.optimizer, it.seed, population, it.detector);
      if (!fs::is_regular_file(path)) {
        throw Error(ErrorCode::kLoad, fmt::format("missing file {}", path.string()));
      }
      return read_scores(path, it.detector, population).scores;
    };
    EvaluationPair pair{load(std::string(kIdTestPopulation)), load(it.ood), options.balance_seed};
    rows[i] = {{index.id_dataset, it.ood, it.detector, it.optimizer, it.seed},
               options.balance_seed,
               evaluate_all(pair)};
  });
  write_metrics(options.out, rows);
}

void cmd_aggregate(const AggregateOptions& options, std::ostream& /*log*/) {
  AggregationConfig config;
  config.epsilon = options.epsilon;
  config.check();
  const MetricSampleTable table = load_samples(options.samples);
  const auto results = aggregate_table(table, options.condition, config);
  write_aggregates(options.out, results);
}

void cmd_report(const ReportOptions& options, std::ostream& /*log*/) {
  const auto rows = read_aggregates(options.aggregates);
  write_table(options.out, rows, options.format);
}

void cmd_synth(const SynthOptions& options, std::ostream& /*log*/) {
  if (options.paper_tables) {
    if (options.spec) {
      throw Error(ErrorCode::kInvalidInput, "--spec and --paper-tables are mutually exclusive");
    }
    write_samples(options.out, generate_paper_tables_fixture());
    return;
  }
  const SynthSpec spec = options.spec ? parse_synth_spec(read_file(*options.spec)) : SynthSpec{};
  write_fixture(options.out, generate_gaussian_fixture(spec));
}

}  // namespace oodbench

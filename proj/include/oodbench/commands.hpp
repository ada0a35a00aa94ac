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

#ifndef OODBENCH_COMMANDS_HPP_
#define OODBENCH_COMMANDS_HPP_

// The four pipeline stages plus fixture generation, callable without the
// command-line front end. Data goes to files only; warnings go to `log`.
//
// Score tree layout:
//   <out>/index.json
//   <out>/<optimizer>/<seed>/<population>/<detector>.csv   header "score"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "oodbench/detectors.hpp"
#include "oodbench/report.hpp"
#include "oodbench/robustness.hpp"

namespace oodbench {

namespace fs = std::filesystem;

/// "all" or a comma-separated list of detector names.
std::vector<DetectorId> parse_detector_list(std::string_view text);

struct ScoreOptions {
  fs::path run_root;
  std::vector<DetectorId> detectors{kAllDetectors.begin(), kAllDetectors.end()};
  double odin_temperature = kOdinDefaultTemperature;
  fs::path out;
};

struct EvalOptions {
  fs::path scores;
  std::uint64_t balance_seed = 0;
  fs::path out;
};

struct AggregateOptions {
  fs::path samples;
  Conditioning condition = Conditioning::kZeta;
  double epsilon = 1e-12;
  fs::path out;
};

struct ReportOptions {
  fs::path aggregates;
  ReportFormat format = ReportFormat::kMarkdown;
  fs::path out;
};

struct SynthOptions {
  std::optional<fs::path> spec;
  bool paper_tables = false;
  /// Run-tree directory, or the samples file with paper_tables.
  fs::path out;
};

void cmd_score(const ScoreOptions& options, std::ostream& log);
void cmd_eval(const EvalOptions& options, std::ostream& log);
void cmd_aggregate(const AggregateOptions& options, std::ostream& log);
void cmd_report(const ReportOptions& options, std::ostream& log);
void cmd_synth(const SynthOptions& options, std::ostream& log);

/// Parses argv and runs one subcommand. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& log);

}  // namespace oodbench

#endif  // OODBENCH_COMMANDS_HPP_

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

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "oodbench/commands.hpp"
#include "oodbench/error.hpp"

namespace oodbench {

int run_cli(int argc, const char* const* argv, std::ostream& log) {
  CLI::App app{"Optimizer-robustness benchmark for out-of-distribution detectors"};
  app.require_subcommand(1);

  ScoreOptions score;
  std::string detector_list = "all";
  auto* score_cmd = app.add_subcommand("score", "Score every run population with the chosen detectors");
  score_cmd->add_option("--run-root", score.run_root, "Run tree root")->required();
  score_cmd->add_option("--detectors", detector_list, "Comma-separated detector names, or all")
      ->capture_default_str();
  score_cmd->add_option("--odin-temp", score.odin_temperature, "ODIN temperature")
      ->capture_default_str();
  score_cmd->add_option("--out", score.out, "Score tree output directory")->required();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compute the five detection metrics per score pair");
  eval_cmd->add_option("--scores", eval.scores, "Score tree written by score")->required();
  eval_cmd->add_option("--balance-seed", eval.balance_seed, "Seed for population balancing")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Metrics CSV output path")->required();

  AggregateOptions aggregate;
  std::string condition = "zeta";
  auto* aggregate_cmd = app.add_subcommand("aggregate", "Mixture moments and robustness scores");
  aggregate_cmd->add_option("--samples", aggregate.samples, "Metrics or samples CSV")->required();
  aggregate_cmd->add_option("--condition", condition, "zeta (over optimizers) or xi (over OOD sets)")
      ->check(CLI::IsMember({"zeta", "xi"}))
      ->capture_default_str();
  aggregate_cmd->add_option("--epsilon", aggregate.epsilon, "Weight regularizer")
      ->capture_default_str();
  aggregate_cmd->add_option("--out", aggregate.out, "Aggregates CSV output path")->required();

  ReportOptions report;
  std::string format = "md";
  auto* report_cmd = app.add_subcommand("report", "Render aggregates as tables");
  report_cmd->add_option("--aggregates", report.aggregates, "Aggregates CSV")->required();
  report_cmd->add_option("--format", format, "md or csv")
      ->check(CLI::IsMember({"md", "csv"}))
      ->capture_default_str();
  report_cmd->add_option("--out", report.out, "Report output path")->required();

  SynthOptions synth;
  fs::path spec_path;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic run tree or the published-results samples");
  auto* spec_opt = synth_cmd->add_option("--spec", spec_path, "Synthetic fixture spec (JSON)");
  auto* paper_opt = synth_cmd->add_flag("--paper-tables", synth.paper_tables,
                                        "Write the published per-seed and per-group results as samples CSV");
  spec_opt->excludes(paper_opt);
  synth_cmd->add_option("--out", synth.out, "Run tree directory, or samples file with --paper-tables")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cout, log);
  }

  try {
    if (*score_cmd) {
      score.detectors = parse_detector_list(detector_list);
      cmd_score(score, log);
    } else if (*eval_cmd) {
      cmd_eval(eval, log);
    } else if (*aggregate_cmd) {
      aggregate.condition = condition == "xi" ? Conditioning::kXi : Conditioning::kZeta;
      cmd_aggregate(aggregate, log);
    } else if (*report_cmd) {
      report.format = *parse_report_format(format);
      cmd_report(report, log);
    } else if (*synth_cmd) {
      if (*spec_opt) synth.spec = spec_path;
      cmd_synth(synth, log);
    }
  } catch (const Error& e) {
    log << fmt::format("oodbench: {}: {}\n", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    log << fmt::format("oodbench: error: {}\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace oodbench

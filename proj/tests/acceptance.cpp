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

// Acceptance run: one PASS/FAIL line per acceptance criterion, nonzero exit if
// any fails. Usage: oodbench_acceptance <path-to-oodbench> <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "oodbench/detectors.hpp"
#include "oodbench/metrics.hpp"
#include "oodbench/robustness.hpp"
#include "oodbench/run_store.hpp"
#include "oodbench/synth.hpp"

using namespace oodbench;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

bool near(double got, double want, double tol) { return std::abs(got - want) <= tol; }

std::string show(double got, double want, double tol) {
  return fmt::format("got {:.6g}, want {} +/- {}", got, want, tol);
}

const MetricAggregate& metric_of(const std::vector<MetricAggregate>& all, MetricId id) {
  return *std::find_if(all.begin(), all.end(),
                       [&](const MetricAggregate& a) { return a.metric == id; });
}

const MetricSampleTable& paper() {
  static const MetricSampleTable t = generate_paper_tables_fixture();
  return t;
}

std::vector<MetricAggregate> zeta(DetectorId d) {
  const std::string id(kPaperDetectorNamespace);
  return aggregate_zeta(paper(), {id, "F-MNIST", d}, paper().optimizers(id), AggregationConfig{});
}

std::vector<MetricAggregate> xi(const std::string& optimizer) {
  const std::string id(kPaperOodSweepNamespace);
  return aggregate_xi(paper(), {id, DetectorId::kMaxSoftmax, optimizer},
                      OodSetRegistry(id, paper().ood_datasets(id)), AggregationConfig{});
}

Outcome golden_moments() {
  Outcome o;
  const std::vector<double> fpr{10.24, 7.47, 16.5, 7.57, 15.32};
  const std::vector<double> de{7.61, 6.225, 10.735, 6.18, 10.11};
  const MomentPair f = moment_estimate(fpr);
  const MomentPair d = moment_estimate(de);
  o.expect(near(f.mean, 11.42, 1e-3), "FPR mean " + show(f.mean, 11.42, 1e-3));
  o.expect(near(f.variance, 14.567, 1e-3), "FPR var " + show(f.variance, 14.567, 1e-3));
  o.expect(near(d.mean, 8.172, 1e-3), "DE mean " + show(d.mean, 8.172, 1e-3));
  o.expect(near(d.variance, 3.68, 1e-3), "DE var " + show(d.variance, 3.68, 1e-3));
  if (o.pass) o.detail = fmt::format("FPR ({:.4f}, {:.4f}), DE ({:.4f}, {:.4f})", f.mean, f.variance, d.mean, d.variance);
  return o;
}

Outcome golden_zeta_mixture() {
  Outcome o;
  const auto agg = zeta(DetectorId::kMaxSoftmax);
  const MomentPair f = metric_of(agg, MetricId::kFprAt95Tpr).mixture;
  const MomentPair d = metric_of(agg, MetricId::kDetectionError).mixture;
  o.expect(near(f.mean, 8.634, 0.02), "FPR mean " + show(f.mean, 8.634, 0.02));
  o.expect(near(f.variance, 5.506, 0.02), "FPR var " + show(f.variance, 5.506, 0.02));
  o.expect(near(d.mean, 6.769, 0.02), "DE mean " + show(d.mean, 6.769, 0.02));
  o.expect(near(d.variance, 1.445, 0.02), "DE var " + show(d.variance, 1.445, 0.02));
  if (o.pass) o.detail = fmt::format("FPR ({:.4f}, {:.4f}), DE ({:.4f}, {:.4f})", f.mean, f.variance, d.mean, d.variance);
  return o;
}

Outcome golden_xi_mixture() {
  Outcome o;
  const MomentPair f = metric_of(xi("Adam"), MetricId::kFprAt95Tpr).mixture;
  o.expect(near(f.mean, 4.162, 0.05), "FPR mean " + show(f.mean, 4.162, 0.05));
  o.expect(near(f.variance, 11.733, 0.05), "FPR var " + show(f.variance, 11.733, 0.05));
  if (o.pass) o.detail = fmt::format("FPR ({:.4f}, {:.4f})", f.mean, f.variance);
  return o;
}

Outcome golden_scores() {
  Outcome o;
  const auto odin = zeta(DetectorId::kOdin);
  const std::vector<std::tuple<MetricId, double, double>> row{
      {MetricId::kFprAt95Tpr, 8.657, 0.005}, {MetricId::kDetectionError, 4.797, 0.005},
      {MetricId::kAuroc, 0.003, 5e-4},       {MetricId::kAuprOut, 0.003, 5e-4},
      {MetricId::kAuprIn, 0.004, 5e-4}};
  for (const auto& [metric, want, tol] : row) {
    const double got = metric_of(odin, metric).score.value;
    o.expect(near(got, want, tol), fmt::format("ODIN {} {}", to_string(metric), show(got, want, tol)));
  }
  const double sgd = metric_of(xi("SGD"), MetricId::kFprAt95Tpr).score.value;
  const double nadam = metric_of(xi("Nadam"), MetricId::kFprAt95Tpr).score.value;
  o.expect(near(sgd, 7.456, 0.01), "SGD FPR " + show(sgd, 7.456, 0.01));
  o.expect(near(nadam, 7.468, 0.01), "Nadam FPR " + show(nadam, 7.468, 0.01));

  // Winners per column, through the ranking op.
  for (MetricId metric : kAllMetrics) {
    std::vector<RobustnessScore> s;
    for (DetectorId d : paper().detectors(std::string(kPaperDetectorNamespace))) {
      RobustnessScore r = metric_of(zeta(d), metric).score;
      r.condition = std::string(display_name(d));
      s.push_back(r);
    }
    const std::string winner = rank_conditions(s).front().condition;
    o.expect(winner == "ODIN", fmt::format("{} winner {} (want ODIN)", to_string(metric), winner));
  }
  std::vector<RobustnessScore> s;
  for (const std::string& opt : paper().optimizers(std::string(kPaperOodSweepNamespace))) {
    RobustnessScore r = metric_of(xi(opt), MetricId::kFprAt95Tpr).score;
    r.condition = opt;
    s.push_back(r);
  }
  const std::string winner = rank_conditions(s).front().condition;
  o.expect(winner == "SGD", "xi FPR winner " + winner + " (want SGD)");
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  Rng rng(20260);
  std::size_t auroc_bad = 0, sweep_bad = 0, aupr_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const bool coarse = rng.below(2) == 0;
    const std::size_t n_id = gen::size_in(rng, 1, 200);
    const std::size_t n_ood = gen::size_in(rng, 1, 200);
    const EvaluationPair p{gen::scores(rng, n_id, coarse, 0.7), gen::scores(rng, n_ood, coarse),
                           0};
    const auto pc = oracle::pairwise_auroc(p.id_scores, p.ood_scores);
    if (auroc(p) != auroc_percent(pc.twice_wins, pc.pairs)) ++auroc_bad;

    const auto sw = oracle::threshold_sweep(p.id_scores, p.ood_scores);
    const double tpr = static_cast<double>(sw.id_accepted) / n_id;
    const double fpr = static_cast<double>(sw.ood_accepted) / n_ood;
    if (fpr_at_95tpr(p) != 100.0 * fpr ||
        detection_error(p) != 100.0 * (0.5 * (1.0 - tpr) + 0.5 * fpr)) {
      ++sweep_bad;
    }

    std::vector<double> neg_id, neg_ood;
    for (double v : p.id_scores) neg_id.push_back(-v);
    for (double v : p.ood_scores) neg_ood.push_back(-v);
    if (std::abs(aupr(p, PositiveClass::kIn) - oracle::aupr(p.id_scores, p.ood_scores)) > 1e-9 ||
        std::abs(aupr(p, PositiveClass::kOut) - oracle::aupr(neg_ood, neg_id)) > 1e-9) {
      ++aupr_bad;
    }
  }
  o.expect(auroc_bad == 0, fmt::format("{} AUROC mismatches", auroc_bad));
  o.expect(sweep_bad == 0, fmt::format("{} FPR/DE mismatches", sweep_bad));
  o.expect(aupr_bad == 0, fmt::format("{} AUPR mismatches", aupr_bad));
  if (o.pass) o.detail = "1000 fixtures, n <= 200";
  return o;
}

Outcome analytic_auroc_check() {
  Outcome o;
  const std::vector<std::array<double, 4>> cases{
      {1.0, 1.0, 0.0, 1.0}, {0.5, 1.0, 0.0, 2.0}, {0.0, 1.0, 0.0, 1.0}, {3.0, 1.5, 0.0, 1.0}};
  std::uint64_t seed = 1;
  double worst = 0.0;
  for (const auto& [mi, si, mo, so] : cases) {
    const auto p = generate_gaussian_scores(mi, si, mo, so, 100000, 100000, seed++);
    const double got = auroc(p), want = analytic_auroc(mi, si, mo, so);
    worst = std::max(worst, std::abs(got - want));
    o.expect(near(got, want, 0.5), show(got, want, 0.5));
  }
  if (o.pass) o.detail = fmt::format("n = 1e5, worst deviation {:.4f}", worst);
  return o;
}

Outcome detector_invariants() {
  Outcome o;
  Rng rng(77);
  double worst_norm = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto z = gen::vec(rng, gen::size_in(rng, 2, 40), 5.0);
    const double c = rng.normal(0.0, 100.0);
    std::vector<double> shifted = z;
    for (double& v : shifted) v += c;
    const auto p = softmax(z), q = softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      sum += p[i];
      worst_shift = std::max(worst_shift, std::abs(p[i] - q[i]));
    }
    worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
  }
  o.expect(worst_norm <= 1e-12, fmt::format("softmax sum off by {:.3g}", worst_norm));
  o.expect(worst_shift <= 1e-12, fmt::format("softmax shift changed by {:.3g}", worst_shift));

  const Matrix logits = gen::logits(rng, 300, 10);
  o.expect(odin_score(logits, 1.0).scores == max_softmax_score(logits).scores,
           "ODIN(T=1) differs from max-softmax");

  // MD at the class means.
  const std::size_t k = 5;
  Matrix train(200, k);
  std::vector<int> labels(200);
  for (std::size_t r = 0; r < 200; ++r) {
    labels[r] = static_cast<int>(r % k);
    for (std::size_t c = 0; c < k; ++c) train(r, c) = rng.normal(c == r % k ? 6.0 : 0.0, 1.0);
  }
  const GaussianModel model = fit_gaussian(train, labels, k);
  Matrix means(k, k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < k; ++j) means(c, j) = model.class_means[c][j];
  }
  double worst_md = 0.0;
  for (double s : mahalanobis_score(model, means).scores) worst_md = std::max(worst_md, std::abs(s));
  o.expect(worst_md <= 1e-9, fmt::format("MD at class means {:.3g}", worst_md));

  // MI on identical passes and the two-pass ln 2 case.
  const std::vector<Matrix> same(4, gen::logits(rng, 50, 6));
  double worst_mi = 0.0;
  for (double s : mutual_information_score(same).scores) worst_mi = std::max(worst_mi, std::abs(s));
  o.expect(worst_mi <= 1e-9, fmt::format("MI on identical passes {:.3g}", worst_mi));
  const std::vector<Matrix> split{Matrix{{800.0, 0.0}}, Matrix{{0.0, 800.0}}};
  const double mi = -mutual_information_score(split).scores[0];
  o.expect(near(mi, std::log(2.0), 1e-9), "two-pass MI " + show(mi, std::log(2.0), 1e-9));

  // Monotone transforms leave all five metrics unchanged.
  std::size_t changed = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const bool coarse = trial % 2 == 0;
    const EvaluationPair p{gen::scores(rng, gen::size_in(rng, 1, 150), coarse, 0.5),
                           gen::scores(rng, gen::size_in(rng, 1, 150), coarse), rng.next()};
    const MetricVector base = evaluate_all(p);
    for (int kind = 0; kind < 3; ++kind) {
      auto f = [kind](std::vector<double> v) {
        for (double& x : v) x = kind == 0 ? std::exp(x) : kind == 1 ? 3.0 * x + 7.0 : std::atan(x) + x * x * x;
        return v;
      };
      if (!(evaluate_all({f(p.id_scores), f(p.ood_scores), p.balance_seed}) == base)) ++changed;
    }
  }
  o.expect(changed == 0, fmt::format("{} transformed fixtures changed a metric", changed));
  return o;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

Outcome end_to_end(const std::string& exe, const fs::path& work) {
  Outcome o;
  double slowest = 0.0;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = work / run;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto p = [&](const char* rel) { return (dir / rel).string(); };
    const std::vector<std::string> steps{
        fmt::format("{} synth --out {}", exe, p("runs")),
        fmt::format("{} score --run-root {} --out {}", exe, p("runs"), p("scores")),
        fmt::format("{} eval --scores {} --out {}", exe, p("scores"), p("metrics.csv")),
        fmt::format("{} aggregate --samples {} --condition zeta --out {}", exe, p("metrics.csv"),
                    p("zeta.csv")),
        fmt::format("{} aggregate --samples {} --condition xi --out {}", exe, p("metrics.csv"),
                    p("xi.csv")),
        fmt::format("{} report --aggregates {} --out {}", exe, p("zeta.csv"), p("zeta.md")),
        fmt::format("{} report --aggregates {} --format csv --out {}", exe, p("xi.csv"),
                    p("xi_report.csv")),
    };
    const auto start = std::chrono::steady_clock::now();
    for (const std::string& cmd : steps) {
      if (std::system(cmd.c_str()) != 0) {
        o.expect(false, "command failed: " + cmd);
        return o;
      }
    }
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  const auto a = snapshot(work / "a"), b = snapshot(work / "b");
  o.expect(!a.empty() && a == b, "the two runs differ");
  o.expect(slowest < 60.0, fmt::format("took {:.1f} s", slowest));
  if (o.pass) o.detail = fmt::format("{} files identical, slowest run {:.2f} s", a.size(), slowest);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: oodbench_acceptance <oodbench> <work-dir>\n";
    return 2;
  }
  const std::string exe = argv[1];
  const fs::path work = argv[2];

  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"golden moments", golden_moments},
      {"golden zeta mixture", golden_zeta_mixture},
      {"golden xi mixture", golden_xi_mixture},
      {"golden robustness scores", golden_scores},
      {"metric oracle equivalence", metric_oracles},
      {"analytic AUROC", analytic_auroc_check},
      {"detector invariants", detector_invariants},
      {"end-to-end determinism", [&] { return end_to_end(exe, work); }},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << (o.detail.empty() ? "" : ": ")
              << o.detail << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", checks.size() - failed, checks.size());
  return failed == 0 ? 0 : 1;
}

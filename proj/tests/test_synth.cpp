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

#include <doctest.h>

#include <algorithm>
#include <map>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "oodbench/detectors.hpp"
#include "oodbench/error.hpp"
#include "oodbench/metrics.hpp"
#include "oodbench/synth.hpp"

using namespace oodbench;

namespace {

std::vector<double> detector_scores(const RunRecord& run, DetectorId id,
                                    const std::string& population) {
  const Matrix& logits = population == kIdTestPopulation ? run.id_test_logits
                                                         : run.ood_logits.at(population);
  switch (id) {
    case DetectorId::kMaxSoftmax: return max_softmax_score(logits).scores;
    case DetectorId::kOdin: return odin_score(logits).scores;
    case DetectorId::kEntropy: return entropy_score(logits).scores;
    case DetectorId::kMargin: return margin_score(logits).scores;
    case DetectorId::kMahalanobis: {
      const auto model = fit_gaussian(*run.train_logits, *run.train_labels, run.num_classes);
      return mahalanobis_score(model, logits).scores;
    }
    case DetectorId::kMcDropout: return mc_dropout_score(run.mc_passes.at(population)).scores;
    case DetectorId::kMutualInformation:
      return mutual_information_score(run.mc_passes.at(population)).scores;
  }
  return {};
}

double detector_auroc(const RunRecord& run, DetectorId id, const std::string& ood) {
  EvaluationPair pair{detector_scores(run, id, std::string(kIdTestPopulation)),
                      detector_scores(run, id, ood), 0};
  return evaluate_all(pair).auroc;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

}  // namespace

TEST_SUITE("gaussian fixture") {
  TEST_CASE("byte-identical trees from the same spec") {
    SynthSpec spec;
    spec.n_id = 50;
    spec.n_ood = 40;
    spec.n_train_per_class = 12;
    spec.seed = 42;
    TempDir a("synth-a"), b("synth-b");
    write_fixture(a.path(), generate_gaussian_fixture(spec));
    write_fixture(b.path(), generate_gaussian_fixture(spec));
    const auto left = snapshot(a.path());
    CHECK(left == snapshot(b.path()));
    // manifest + 3 optimizers x 3 seeds x (2 train + 2 id + 2 ood + 3 pops x 6 passes)
    CHECK(left.size() == 1 + 9 * (2 + 2 + 2 + 18));

    spec.seed = 43;
    TempDir c("synth-c");
    write_fixture(c.path(), generate_gaussian_fixture(spec));
    CHECK(read_file(a / "adam/1/id_test_logits.csv") !=
          read_file(c / "adam/1/id_test_logits.csv"));
  }

  TEST_CASE("every run validates, with the Gaussian-fit preconditions") {
    const SynthFixture fx = generate_gaussian_fixture(SynthSpec{});
    CHECK(fx.runs.size() == 9);
    CHECK(fx.manifest.ood_datasets == std::vector<std::string>{"near", "far"});
    CHECK(fx.manifest.mc_passes == 6);
    for (const RunRecord& r : fx.runs) {
      CHECK(validate_run(r, {.require_gaussian_fit = true}).empty());
      CHECK(r.id_test_logits.rows() == 800);
      CHECK(r.ood_logits.at("far").rows() == 500);
      CHECK(r.train_logits->rows() == 1000);
    }
  }

  TEST_CASE("far shift is detected by every detector") {
    SynthSpec spec;
    spec.optimizers = {"adam"};
    spec.seeds_per_optimizer = 1;
    const SynthFixture fx = generate_gaussian_fixture(spec);
    for (DetectorId id : kAllDetectors) {
      const double a = detector_auroc(fx.runs[0], id, "far");
      CHECK_MESSAGE(a > 99.0, to_string(id) << " AUROC " << a);
    }
  }

  TEST_CASE("zero shift is chance for every detector") {
    SynthSpec spec;
    spec.optimizers = {"adam"};
    spec.seeds_per_optimizer = 1;
    spec.n_id = 10000;
    spec.n_ood = 10000;
    spec.mc_passes = 2;
    spec.ood_sets = {{"same", 0.0}};
    const SynthFixture fx = generate_gaussian_fixture(spec);
    for (DetectorId id : kAllDetectors) {
      const double a = detector_auroc(fx.runs[0], id, "same");
      CHECK_MESSAGE(std::abs(a - 50.0) <= 2.0, to_string(id) << " AUROC " << a);
    }
  }

  TEST_CASE("spec validation") {
    SynthSpec spec;
    spec.num_classes = 1;
    CHECK_THROWS_AS(spec.check(), Error);
    spec = SynthSpec{};
    spec.noise = 0.0;
    CHECK_THROWS_AS(spec.check(), Error);
    spec = SynthSpec{};
    spec.n_ood = 3;
    CHECK_THROWS_AS(spec.check(), Error);
    spec = SynthSpec{};
    spec.optimizers = {"adam", "adam"};
    CHECK_THROWS_AS(spec.check(), Error);
  }

  TEST_CASE("spec parsing") {
    const SynthSpec s = parse_synth_spec(
        R"({"num_classes": 4, "ood_sets": [{"name": "x", "delta": 2.5}], "seed": 9})");
    CHECK(s.num_classes == 4);
    CHECK(s.seed == 9);
    REQUIRE(s.ood_sets.size() == 1);
    CHECK(s.ood_sets[0].name == "x");
    CHECK(s.ood_sets[0].delta == 2.5);
    CHECK(s.n_id == SynthSpec{}.n_id);
    CHECK_THROWS_AS(parse_synth_spec(R"({"num_clases": 4})"), Error);
    CHECK_THROWS_AS(parse_synth_spec(R"({"num_classes": "four"})"), Error);
    CHECK_THROWS_AS(parse_synth_spec("{"), Error);
  }
}

TEST_SUITE("gaussian scores") {
  TEST_CASE("analytic AUROC") {
    CHECK(analytic_auroc(0, 1, 0, 1) == doctest::Approx(50.0));
    CHECK(analytic_auroc(1, 1, 0, 0) == doctest::Approx(84.13447460685429));
    CHECK(analytic_auroc(0, 3, 0.5, 4) == doctest::Approx(100.0 - analytic_auroc(0.5, 4, 0, 3)));
  }

  TEST_CASE("sample AUROC approaches the analytic value") {
    const auto pair = generate_gaussian_scores(1.0, 1.0, 0.0, 1.0, 100000, 100000, 5);
    CHECK(pair.id_scores.size() == 100000);
    CHECK(auroc(pair) == doctest::Approx(analytic_auroc(1.0, 1.0, 0.0, 1.0)).epsilon(0.005));
  }
}

TEST_SUITE("published tables fixture") {
  const MetricSampleTable& fixture() {
    static const MetricSampleTable t = generate_paper_tables_fixture();
    return t;
  }

  TEST_CASE("entry counts") {
    // detectors: 7 optimizers x 7 detectors; sweep: 7 optimizers x 4 OOD sets; 5 seeds each
    CHECK(fixture().size() == (49 + 28) * 5);
    CHECK(fixture().id_datasets() == std::vector<std::string>{std::string(kPaperDetectorNamespace),
                                                               std::string(kPaperOodSweepNamespace)});
    CHECK(fixture().optimizers("MNIST") ==
          std::vector<std::string>{"Adam", "RMSprop", "Adamax", "Nadam", "SGD", "Adagrad",
                                   "Adadelta"});
    CHECK(fixture().ood_datasets("MNIST:ood-sweep") ==
          std::vector<std::string>{"F-MNIST", "Omniglot", "Gaussian", "Uniform"});
    CHECK(fixture().detectors("MNIST").size() == 7);
  }

  TEST_CASE("Adam seeds are carried as published") {
    const auto g = fixture().group("MNIST", "F-MNIST", DetectorId::kMaxSoftmax, "Adam");
    REQUIRE(g.size() == 5);
    std::vector<double> fpr;
    for (const auto& m : g) fpr.push_back(m.fpr_at_95tpr);
    CHECK(fpr == std::vector<double>{10.24, 7.47, 16.5, 7.57, 15.32});
    CHECK(g[2].aupr_out == 96.705);
    CHECK(g[2].aupr_in == 96.018);
  }

  TEST_CASE("moment-only groups reproduce their moments") {
    const auto g = fixture().group("MNIST:ood-sweep", "Gaussian", DetectorId::kMaxSoftmax, "Adam");
    std::vector<double> fpr;
    for (const auto& m : g) fpr.push_back(m.fpr_at_95tpr);
    const auto mo = oracle::moments(fpr);
    CHECK(mo.first == doctest::Approx(1.146).epsilon(1e-12));
    CHECK(mo.second == doctest::Approx(1.067).epsilon(1e-12));
  }

  TEST_CASE("pseudo seeds") {
    for (auto [mean, var] : {std::pair{50.0, 4.0}, {1.146, 1.067}, {97.0, 0.2}, {0.0, 0.0}}) {
      const auto v = pseudo_seeds(mean, var);
      REQUIRE(v.size() == 5);
      for (double x : v) {
        CHECK(x >= 0.0);
        CHECK(x <= 100.0);
      }
      const auto mo = oracle::moments(v);
      CHECK(mo.first == doctest::Approx(mean).epsilon(1e-12));
      CHECK(mo.second == doctest::Approx(var).epsilon(1e-12));
    }
    CHECK_THROWS_AS(pseudo_seeds(50.0, 10000.0), Error);
    CHECK_THROWS_AS(pseudo_seeds(50.0, -1.0), Error);
  }
}

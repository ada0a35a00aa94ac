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

#include "oodbench/synth.hpp"

#include <array>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "oodbench/error.hpp"
#include "oodbench/random.hpp"

namespace oodbench {
namespace {

using nlohmann::json;

Matrix draw_logits(Rng& rng, const SynthSpec& spec, std::size_t rows, double anchor,
                   std::vector<int>* labels, std::optional<int> fixed_class = std::nullopt) {
  const std::size_t k = spec.num_classes;
  Matrix out(rows, k, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const int c = fixed_class ? *fixed_class : static_cast<int>(rng.below(k));
    for (std::size_t j = 0; j < k; ++j) out(i, j) = rng.normal(0.0, spec.noise);
    out(i, static_cast<std::size_t>(c)) += anchor;
    if (labels) labels->push_back(c);
  }
  return out;
}

std::vector<Matrix> draw_passes(Rng& rng, const SynthSpec& spec, const Matrix& base) {
  std::vector<Matrix> passes;
  passes.reserve(spec.mc_passes);
  for (std::uint32_t s = 0; s < spec.mc_passes; ++s) {
    Matrix pass = base;
    for (double& v : pass.values()) v += rng.normal(0.0, spec.mc_noise);
    passes.push_back(std::move(pass));
  }
  return passes;
}

// Published rows, columns in the order FPR, detection error, AUROC, AUPR-Out, AUPR-In.
using Row = std::array<double, 5>;

struct MomentRow {
  const char* name;
  Row mean;
  Row variance;
};

constexpr std::array<MetricId, 5> kPublishedColumns = {
    MetricId::kFprAt95Tpr, MetricId::kDetectionError, MetricId::kAuroc,
    MetricId::kAuprOut,    MetricId::kAuprIn,
};

// Adam, max-softmax, MNIST vs F-MNIST, one row per training seed.
constexpr std::array<Row, 5> kAdamSeeds = {{
    {10.24, 7.61, 97.728, 97.981, 97.483},
    {7.47, 6.225, 97.834, 98.272, 97.176},
    {16.5, 10.735, 96.421, 96.705, 96.018},
    {7.57, 6.18, 98.195, 98.482, 97.897},
    {15.32, 10.11, 96.554, 96.671, 96.277},
}};

// max-softmax, MNIST vs F-MNIST, per optimizer (Adam comes from the seed rows).
constexpr std::array<MomentRow, 6> kOptimizerMoments = {{
    {"RMSprop", {7.804, 6.319, 97.988, 98.278, 97.609}, {5.236, 1.446, 0.256, 0.276, 0.344}},
    {"Adamax", {8.844, 6.897, 97.608, 97.971, 97.111}, {4.348, 1.096, 0.156, 0.129, 0.224}},
    {"Nadam", {9.018, 6.968, 97.751, 98.054, 97.349}, {0.886, 0.231, 0.022, 0.026, 0.118}},
    {"SGD", {7.236, 6.042, 98.026, 98.385, 97.56}, {3.911, 1.039, 0.204, 0.182, 0.212}},
    {"Adagrad", {8.56, 6.721, 97.685, 98.103, 97.122}, {3.697, 0.972, 0.233, 0.176, 0.351}},
    {"Adadelta", {8.252, 6.572, 97.88, 98.191, 97.48}, {9.935, 2.634, 0.503, 0.455, 0.664}},
}};

// Mixture moments per detector over the seven optimizers (max-softmax comes
// from the optimizer rows above).
constexpr std::array<MomentRow, 6> kDetectorMoments = {{
    {"odin", {4.932, 4.84, 98.944, 99.036, 98.87}, {3.081, 0.983, 0.12, 0.104, 0.137}},
    {"md", {64.707, 34.837, 69.108, 75.163, 62.276}, {31.994, 7.966, 19.587, 14.237, 18.813}},
    {"entropy", {8.549, 6.728, 97.944, 98.195, 97.703}, {5.467, 1.442, 0.22, 0.202, 0.327}},
    {"margin", {8.777, 6.842, 97.625, 98.023, 96.855}, {5.52, 1.448, 0.214, 0.222, 0.344}},
    {"mc-dropout", {8.218, 6.536, 97.868, 98.213, 97.465}, {4.33, 1.209, 0.221, 0.191, 0.298}},
    {"mi", {8.817, 6.812, 97.238, 97.857, 96.125}, {4.748, 1.285, 0.224, 0.199, 0.458}},
}};

// Adam, max-softmax, per OOD set other than F-MNIST.
constexpr std::array<MomentRow, 3> kAdamOodMoments = {{
    {"Omniglot", {6.08, 5.246, 98.205, 98.613, 97.559}, {1.373, 0.547, 0.127, 0.079, 0.319}},
    {"Gaussian", {1.146, 0.99, 99.348, 99.62, 98.073}, {1.067, 0.343, 0.543, 0.167, 5.747}},
    {"Uniform", {3.368, 2.757, 98.406, 99.003, 96.415}, {1.663, 0.854, 0.567, 0.19, 5.02}},
}};

// max-softmax mixture moments over the four OOD sets, per optimizer other than Adam.
constexpr std::array<MomentRow, 6> kOptimizerOodMoments = {{
    {"RMSprop", {4.059, 3.497, 98.443, 98.895, 97.696}, {18.879, 9.398, 1.862, 1.189, 4.433}},
    {"Adamax", {3.487, 3.305, 98.674, 99.058, 98.014}, {10.255, 6.656, 0.88, 0.609, 1.364}},
    {"Nadam", {2.404, 2.495, 99.225, 99.476, 99.293}, {9.64, 6.995, 0.86, 0.518, 1.018}},
    {"SGD", {2.82, 2.578, 98.849, 99.22, 98.161}, {6.985, 5.025, 0.632, 0.404, 1.188}},
    {"Adagrad", {4.346, 3.835, 98.417, 98.843, 97.702}, {9.209, 5.834, 0.816, 0.502, 2.285}},
    {"Adadelta", {4.188, 3.707, 98.406, 98.863, 97.554}, {12.394, 6.758, 1.241, 0.716, 3.719}},
}};

constexpr std::array<const char*, 7> kOptimizers = {"Adam",  "RMSprop", "Adamax",  "Nadam",
                                                    "SGD",   "Adagrad", "Adadelta"};
constexpr std::array<const char*, 4> kOodSets = {"F-MNIST", "Omniglot", "Gaussian", "Uniform"};

MetricVector to_vector(const Row& row) {
  MetricVector v;
  for (std::size_t i = 0; i < row.size(); ++i) v.set(kPublishedColumns[i], row[i]);
  return v;
}

void add_seeds(MetricSampleTable& table, const SampleKey& base, const std::array<Row, 5>& seeds) {
  for (std::size_t j = 0; j < seeds.size(); ++j) {
    SampleKey key = base;
    key.seed = static_cast<std::uint32_t>(j + 1);
    table.add(key, to_vector(seeds[j]));
  }
}

void add_moments(MetricSampleTable& table, const SampleKey& base, const MomentRow& row) {
  std::array<Row, 5> seeds{};
  for (std::size_t col = 0; col < 5; ++col) {
    const auto values = pseudo_seeds(row.mean[col], row.variance[col]);
    for (std::size_t j = 0; j < 5; ++j) seeds[j][col] = values[j];
  }
  add_seeds(table, base, seeds);
}

void check_name(const std::string& name, const char* what) {
  if (name.empty() || name.find_first_of("/\\,") != std::string::npos || name == "." ||
      name == "..") {
    throw Error(ErrorCode::kInvalidInput, fmt::format("invalid {} name '{}'", what, name));
  }
}

}  // namespace

void SynthSpec::check() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidInput, "synth spec: " + why); };
  check_name(id_dataset, "ID dataset");
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (n_train_per_class < 10 || n_id < 10 || n_ood < 10) fail("sample counts must be >= 10");
  if (!(noise > 0.0) || !std::isfinite(noise)) fail("noise must be positive");
  if (!(mc_noise >= 0.0) || !std::isfinite(mc_noise)) fail("mc_noise must be non-negative");
  if (!std::isfinite(separation)) fail("separation must be finite");
  if (mc_passes == 1) fail("mc_passes must be 0 or >= 2");
  if (seeds_per_optimizer < 1) fail("seeds_per_optimizer must be >= 1");
  if (ood_sets.empty()) fail("ood_sets is empty");
  if (optimizers.empty()) fail("optimizers is empty");
  std::set<std::string> seen;
  for (const auto& o : ood_sets) {
    check_name(o.name, "OOD set");
    if (!std::isfinite(o.delta)) fail(fmt::format("delta of '{}' must be finite", o.name));
    if (o.name == kIdTestPopulation || !seen.insert(o.name).second) {
      fail(fmt::format("duplicate or reserved OOD set name '{}'", o.name));
    }
  }
  seen.clear();
  for (const auto& name : optimizers) {
    check_name(name, "optimizer");
    if (!seen.insert(name).second) fail(fmt::format("duplicate optimizer '{}'", name));
  }
}

SynthSpec parse_synth_spec(std::string_view json_text) {
  SynthSpec spec;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidInput, "synth spec must be a JSON object");
    static const std::set<std::string> known = {
        "id_dataset", "num_classes", "n_train_per_class", "n_id",       "n_ood",
        "separation", "noise",       "ood_sets",          "optimizers", "seeds_per_optimizer",
        "mc_passes",  "mc_noise",    "seed",              "balance_seed"};
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) {
        throw Error(ErrorCode::kInvalidInput, fmt::format("synth spec: unknown key '{}'", key));
      }
    }
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("id_dataset", spec.id_dataset);
    get("num_classes", spec.num_classes);
    get("n_train_per_class", spec.n_train_per_class);
    get("n_id", spec.n_id);
    get("n_ood", spec.n_ood);
    get("separation", spec.separation);
    get("noise", spec.noise);
    get("optimizers", spec.optimizers);
    get("seeds_per_optimizer", spec.seeds_per_optimizer);
    get("mc_passes", spec.mc_passes);
    get("mc_noise", spec.mc_noise);
    get("seed", spec.seed);
    get("balance_seed", spec.balance_seed);
    if (j.contains("ood_sets")) {
      spec.ood_sets.clear();
      for (const json& o : j.at("ood_sets")) {
        spec.ood_sets.push_back({o.at("name").get<std::string>(), o.at("delta").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("synth spec: {}", e.what()));
  }
  spec.check();
  return spec;
}

SynthFixture generate_gaussian_fixture(const SynthSpec& spec) {
  spec.check();
  SynthFixture fixture;
  Manifest& m = fixture.manifest;
  m.id_dataset = spec.id_dataset;
  m.num_classes = spec.num_classes;
  m.optimizers = spec.optimizers;
  m.seeds_per_optimizer = spec.seeds_per_optimizer;
  for (const auto& o : spec.ood_sets) m.ood_datasets.push_back(o.name);
  m.mc_passes = spec.mc_passes;
  m.balance_seed = spec.balance_seed;

  for (std::size_t t = 0; t < spec.optimizers.size(); ++t) {
    for (std::uint32_t j = 1; j <= spec.seeds_per_optimizer; ++j) {
      Rng rng(mix_seed(mix_seed(spec.seed, t), j));
      RunRecord r;
      r.key = {spec.id_dataset, spec.optimizers[t], j};
      r.num_classes = spec.num_classes;

      std::vector<int> train_labels;
      std::vector<double> train_values;
      for (std::size_t c = 0; c < spec.num_classes; ++c) {
        const Matrix block = draw_logits(rng, spec, spec.n_train_per_class, spec.separation,
                                         &train_labels, static_cast<int>(c));
        train_values.insert(train_values.end(), block.values().begin(), block.values().end());
      }
      r.train_logits = Matrix(train_labels.size(), spec.num_classes, std::move(train_values));
      r.train_labels = std::move(train_labels);

      std::vector<int> test_labels;
      r.id_test_logits = draw_logits(rng, spec, spec.n_id, spec.separation, &test_labels);
      r.id_test_labels = std::move(test_labels);
      for (const auto& o : spec.ood_sets) {
        r.ood_logits.emplace(o.name,
                             draw_logits(rng, spec, spec.n_ood, spec.separation - o.delta, nullptr));
      }
      if (spec.mc_passes > 0) {
        r.mc_passes.emplace(std::string(kIdTestPopulation),
                            draw_passes(rng, spec, r.id_test_logits));
        for (const auto& o : spec.ood_sets) {
          r.mc_passes.emplace(o.name, draw_passes(rng, spec, r.ood_logits.at(o.name)));
        }
      }
      fixture.runs.push_back(std::move(r));
    }
  }
  return fixture;
}

void write_fixture(const fs::path& root, const SynthFixture& fixture) {
  write_run_tree(root, fixture.manifest, fixture.runs);
}

EvaluationPair generate_gaussian_scores(double mu_id, double sigma_id, double mu_ood,
                                        double sigma_ood, std::size_t n_id, std::size_t n_ood,
                                        std::uint64_t seed) {
  if (!(sigma_id >= 0.0) || !(sigma_ood >= 0.0) || n_id == 0 || n_ood == 0) {
    throw Error(ErrorCode::kInvalidInput, "gaussian scores need sigma >= 0 and n > 0");
  }
  Rng rng(seed);
  EvaluationPair pair;
  pair.id_scores.reserve(n_id);
  pair.ood_scores.reserve(n_ood);
  for (std::size_t i = 0; i < n_id; ++i) pair.id_scores.push_back(rng.normal(mu_id, sigma_id));
  for (std::size_t i = 0; i < n_ood; ++i) pair.ood_scores.push_back(rng.normal(mu_ood, sigma_ood));
  return pair;
}

double analytic_auroc(double mu_id, double sigma_id, double mu_ood, double sigma_ood) {
  const double z = (mu_id - mu_ood) / std::sqrt(sigma_id * sigma_id + sigma_ood * sigma_ood);
  return 50.0 * std::erfc(-z / std::sqrt(2.0));
}

std::vector<double> pseudo_seeds(double mean, double variance) {
  if (!(variance >= 0.0)) throw Error(ErrorCode::kInvalidInput, "variance must be >= 0");
  const double a = std::sqrt(variance / 4.0);
  // Four values on one side, one value four steps away on the other.
  if (mean - 4.0 * a >= 0.0 && mean + a <= 100.0) {
    return {mean + a, mean + a, mean + a, mean + a, mean - 4.0 * a};
  }
  if (mean - a >= 0.0 && mean + 4.0 * a <= 100.0) {
    return {mean - a, mean - a, mean - a, mean - a, mean + 4.0 * a};
  }
  throw Error(ErrorCode::kDomain,
              fmt::format("no five-point expansion of ({}, {}) fits in [0, 100]", mean, variance));
}

MetricSampleTable generate_paper_tables_fixture() {
  MetricSampleTable table;
  const std::string detectors_id(kPaperDetectorNamespace);
  const std::string sweep_id(kPaperOodSweepNamespace);

  // Detector comparison: every detector under all seven optimizers on F-MNIST.
  add_seeds(table, {detectors_id, kOodSets[0], DetectorId::kMaxSoftmax, kOptimizers[0], 1},
            kAdamSeeds);
  for (const MomentRow& row : kOptimizerMoments) {
    add_moments(table, {detectors_id, kOodSets[0], DetectorId::kMaxSoftmax, row.name, 1}, row);
  }
  for (const MomentRow& row : kDetectorMoments) {
    const DetectorId detector = *parse_detector(row.name);
    for (const char* optimizer : kOptimizers) {
      add_moments(table, {detectors_id, kOodSets[0], detector, optimizer, 1}, row);
    }
  }

  // Optimizer comparison: max-softmax across the four OOD sets.
  add_seeds(table, {sweep_id, kOodSets[0], DetectorId::kMaxSoftmax, kOptimizers[0], 1},
            kAdamSeeds);
  for (const MomentRow& row : kAdamOodMoments) {
    add_moments(table, {sweep_id, row.name, DetectorId::kMaxSoftmax, kOptimizers[0], 1}, row);
  }
  for (const MomentRow& row : kOptimizerOodMoments) {
    for (const char* ood : kOodSets) {
      add_moments(table, {sweep_id, ood, DetectorId::kMaxSoftmax, row.name, 1}, row);
    }
  }
  return table;
}

}  // namespace oodbench

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

#include <cmath>
#include <numeric>

#include "generators.hpp"
#include "oracles.hpp"
#include "oodbench/detectors.hpp"
#include "oodbench/error.hpp"
#include "oodbench/metrics.hpp"

using namespace oodbench;

namespace {

oracle::Vec to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

Matrix shifted(const Matrix& m, double c) {
  Matrix out = m;
  for (double& v : out.values()) v += c;
  return out;
}

// Labels 0..k-1 repeated, so every class gets rows/k training rows.
std::vector<int> cyclic_labels(std::size_t rows, std::size_t k) {
  std::vector<int> y(rows);
  for (std::size_t i = 0; i < rows; ++i) y[i] = static_cast<int>(i % k);
  return y;
}

}  // namespace

TEST_SUITE("softmax") {
  TEST_CASE("small analytic cases") {
    const auto p = softmax(std::vector<double>{0.0, 0.0});
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
    const auto q = softmax(std::vector<double>{2.0, 0.0}, 1000.0);
    CHECK(std::abs(q[0] - 0.50050) < 1e-5);
    CHECK(std::abs(q[1] - 0.49950) < 1e-5);
  }

  TEST_CASE("normalized and shift invariant on random rows") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t k = gen::size_in(rng, 2, 40);
      const auto v = gen::vec(rng, k, 30.0);
      const double t = 0.05 + 10.0 * rng.uniform();
      const double c = rng.normal(0.0, 500.0);
      auto w = v;
      for (double& x : w) x += c;
      const auto p = softmax(v, t);
      const auto p2 = softmax(w, t);
      double sum = 0;
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(p[i] >= 0.0);
        sum += p[i];
        CHECK(std::abs(p[i] - p2[i]) <= 1e-12);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      const auto ref = oracle::softmax(v, t);
      for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(p[i] - ref[i]) <= 1e-13);
    }
  }

  TEST_CASE("rejects bad input") {
    CHECK_THROWS_AS(softmax(std::vector<double>{1.0, NAN}), Error);
    CHECK_THROWS_AS(softmax(std::vector<double>{1.0, INFINITY}), Error);
    CHECK_THROWS_AS(softmax(std::vector<double>{1.0, 2.0}, 0.0), Error);
    CHECK_THROWS_AS(softmax(std::vector<double>{1.0, 2.0}, -1.0), Error);
  }
}

TEST_SUITE("softmax detectors") {
  TEST_CASE("max-softmax edge rows") {
    const Matrix m{{10.0, -10.0}, {1, 1}};
    const auto s = max_softmax_score(m).scores;
    CHECK(s[0] > 0.9999999);
    CHECK(s[0] <= 1.0);
    const Matrix flat(1, 10, 3.25);
    CHECK(max_softmax_score(flat).scores[0] == doctest::Approx(0.1).epsilon(1e-15));
  }

  TEST_CASE("max-softmax matches brute force on a random 5x3 matrix") {
    Rng rng(5);
    const Matrix m = gen::logits(rng, 5, 3);
    const auto s = max_softmax_score(m).scores;
    for (std::size_t i = 0; i < 5; ++i) {
      const auto p = oracle::softmax(to_vec(m.row(i)));
      CHECK(std::abs(s[i] - *std::max_element(p.begin(), p.end())) <= 1e-14);
    }
  }

  TEST_CASE("ODIN at T = 1 is max-softmax, at large T tends to 1/K") {
    Rng rng(6);
    const Matrix m = gen::logits(rng, 50, 7);
    CHECK(odin_score(m, 1.0).scores == max_softmax_score(m).scores);
    CHECK(odin_score(m, 1.0).detector == DetectorId::kOdin);
    const Matrix two{{2.0, 0.0}};
    CHECK(std::abs(odin_score(two).scores[0] - 0.50050) < 1e-5);
    for (double s : odin_score(m, 1e9).scores) CHECK(std::abs(s - 1.0 / 7.0) < 1e-6);
  }

  TEST_CASE("entropy: analytic values and oracle") {
    const Matrix m{{800.0, 0.0, 0.0}, {0, 0, 0}};
    const Matrix uniform(1, 10, -4.0);
    CHECK(entropy_score(m).scores[0] == doctest::Approx(0.0));
    CHECK(std::abs(entropy_score(uniform).scores[0] + std::log(10.0)) < 1e-12);
    Rng rng(7);
    const Matrix r = gen::logits(rng, 100, 9);
    const auto s = entropy_score(r).scores;
    for (std::size_t i = 0; i < r.rows(); ++i) {
      const double ref = -oracle::entropy(oracle::softmax(to_vec(r.row(i))));
      CHECK(std::abs(s[i] - ref) <= 1e-10);
      CHECK(s[i] <= 1e-15);
      CHECK(s[i] >= -std::log(9.0) - 1e-12);
    }
  }

  TEST_CASE("margin: analytic values and sort oracle") {
    const Matrix probs{{std::log(0.7), std::log(0.2), std::log(0.1)}};
    CHECK(std::abs(margin_score(probs).scores[0] - 0.5) < 1e-12);
    CHECK(margin_score(Matrix(1, 4, 2.0)).scores[0] == 0.0);
    Rng rng(8);
    const Matrix r = gen::logits(rng, 100, 6);
    const auto s = margin_score(r).scores;
    for (std::size_t i = 0; i < r.rows(); ++i) {
      CHECK(std::abs(s[i] - oracle::margin(oracle::softmax(to_vec(r.row(i))))) <= 1e-12);
    }
  }

  TEST_CASE("scores are invariant to a per-row constant shift") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix m = gen::logits(rng, 20, gen::size_in(rng, 2, 12));
      const double c = rng.normal(0.0, 100.0);
      const Matrix w = shifted(m, c);
      for (auto fn : {+[](const Matrix& x) { return max_softmax_score(x).scores; },
                      +[](const Matrix& x) { return odin_score(x).scores; },
                      +[](const Matrix& x) { return entropy_score(x).scores; },
                      +[](const Matrix& x) { return margin_score(x).scores; }}) {
        const auto a = fn(m), b = fn(w);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
      }
      const std::vector<Matrix> pa{m, gen::logits(rng, 20, m.cols())};
      const std::vector<Matrix> pb{w, shifted(pa[1], c)};
      for (int which = 0; which < 2; ++which) {
        const auto a = which ? mutual_information_score(pa).scores : mc_dropout_score(pa).scores;
        const auto b = which ? mutual_information_score(pb).scores : mc_dropout_score(pb).scores;
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
      }
    }
  }

  TEST_CASE("concentrated logits score above diffuse ones for every detector") {
    Rng rng(10);
    const std::size_t k = 6, n = 200;
    Matrix sharp(n, k), diffuse(n, k);
    std::vector<int> labels = cyclic_labels(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        sharp(i, j) = rng.normal(0.0, 0.3) + (static_cast<int>(j) == labels[i] ? 8.0 : 0.0);
        diffuse(i, j) = rng.normal(0.0, 0.3);
      }
    }
    const GaussianModel model = fit_gaussian(sharp, labels, k);
    auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto perturb = [&](const Matrix& m) {
      std::vector<Matrix> passes;
      for (int s = 0; s < 4; ++s) {
        Matrix p = m;
        for (double& v : p.values()) v += rng.normal(0.0, 1.0);
        passes.push_back(p);
      }
      return passes;
    };
    const auto sharp_passes = perturb(sharp), diffuse_passes = perturb(diffuse);
    CHECK(mean(max_softmax_score(sharp).scores) > mean(max_softmax_score(diffuse).scores));
    CHECK(mean(odin_score(sharp).scores) > mean(odin_score(diffuse).scores));
    CHECK(mean(entropy_score(sharp).scores) > mean(entropy_score(diffuse).scores));
    CHECK(mean(margin_score(sharp).scores) > mean(margin_score(diffuse).scores));
    CHECK(mean(mahalanobis_score(model, sharp).scores) >
          mean(mahalanobis_score(model, diffuse).scores));
    CHECK(mean(mc_dropout_score(sharp_passes).scores) >
          mean(mc_dropout_score(diffuse_passes).scores));
    CHECK(mean(mutual_information_score(sharp_passes).scores) >
          mean(mutual_information_score(diffuse_passes).scores));
  }

  TEST_CASE("natural-log entropy and a rescaled entropy rank identically") {
    Rng rng(12);
    const auto a = entropy_score(gen::logits(rng, 150, 5)).scores;
    const auto b = entropy_score(gen::logits(rng, 150, 5, 1.0)).scores;
    auto rescale = [](std::vector<double> v) {
      for (double& x : v) x /= std::log(2.0);
      return v;
    };
    const EvaluationPair nat{a, b, 0}, bits{rescale(a), rescale(b), 0};
    CHECK(auroc(nat) == auroc(bits));
  }
}

TEST_SUITE("gaussian fit") {
  TEST_CASE("degenerate classes fall back to an absolute ridge") {
    const Matrix train{{1, 0}, {1, 0}, {0, 1}, {0, 1}};
    const std::vector<int> y{0, 0, 1, 1};
    const GaussianModel g = fit_gaussian(train, y, 2);
    for (double v : g.shared_covariance.values()) CHECK(v == 0.0);
    CHECK(g.ridge > 0.0);
    CHECK(g.precision_factor(0, 0) == doctest::Approx(std::sqrt(g.ridge)));
    CHECK(g.precision_factor(1, 0) == 0.0);
  }

  TEST_CASE("symmetric class data gives the analytic mean") {
    const Matrix train{{1, 2}, {3, 2}, {2, 1}, {2, 3}, {-1, -1}, {-3, -3}};
    const std::vector<int> y{0, 0, 0, 0, 1, 1};
    const GaussianModel g = fit_gaussian(train, y, 2);
    CHECK(g.class_means[0] == std::vector<double>{2.0, 2.0});
    CHECK(g.class_means[1] == std::vector<double>{-2.0, -2.0});
  }

  TEST_CASE("tied covariance matches a two-pass oracle") {
    Rng rng(13);
    const std::size_t m = 200, k = 4;
    const Matrix train = gen::logits(rng, m, k);
    std::vector<int> y(m);
    for (auto& v : y) v = static_cast<int>(rng.below(3));
    y[0] = 0, y[1] = 0, y[2] = 1, y[3] = 1, y[4] = 2, y[5] = 2, y[6] = 3, y[7] = 3;
    const GaussianModel g = fit_gaussian(train, y, k);
    oracle::Mat mu(k, oracle::Vec(k, 0.0));
    std::vector<double> cnt(k, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      cnt[y[i]] += 1;
      for (std::size_t d = 0; d < k; ++d) mu[y[i]][d] += train(i, d);
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (double& v : mu[c]) v /= cnt[c];
    }
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        double s = 0;
        for (std::size_t i = 0; i < m; ++i) {
          s += (train(i, a) - mu[y[i]][a]) * (train(i, b) - mu[y[i]][b]);
        }
        CHECK(std::abs(g.shared_covariance(a, b) - s / m) <= 1e-9);
      }
    }
  }

  TEST_CASE("fit errors") {
    const Matrix train{{1, 0}, {1, 0}, {0, 1}};
    CHECK_THROWS_AS(fit_gaussian(train, std::vector<int>{0, 0, 1}, 2), Error);
    try {
      fit_gaussian(train, std::vector<int>{0, 0, 0}, 2);
      FAIL("expected a fit error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kFit);
      CHECK(std::string(e.what()).find("class 1") != std::string::npos);
    }
    CHECK_THROWS_AS(fit_gaussian(train, std::vector<int>{0, 0}, 2), Error);
    CHECK_THROWS_AS(fit_gaussian(train, std::vector<int>{0, 0, 1}, 3), Error);
  }
}

TEST_SUITE("mahalanobis") {
  TEST_CASE("zero at a class mean, unit distance in the identity case") {
    // Four points per class at mean +- sqrt(2) e_a: the pooled covariance is I.
    const double r = std::sqrt(2.0);
    Matrix train(8, 2);
    const double pts[4][2] = {{r, 0}, {-r, 0}, {0, r}, {0, -r}};
    for (int i = 0; i < 4; ++i) {
      train(i, 0) = 1.0 + pts[i][0];
      train(i, 1) = pts[i][1];
      train(4 + i, 0) = pts[i][0];
      train(4 + i, 1) = 1.0 + pts[i][1];
    }
    const std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
    const GaussianModel g = fit_gaussian(train, y, 2, {.ridge = 0.0});
    CHECK(g.shared_covariance(0, 0) == doctest::Approx(1.0));
    CHECK(g.shared_covariance(1, 1) == doctest::Approx(1.0));
    CHECK(g.shared_covariance(0, 1) == doctest::Approx(0.0));
    const Matrix at_mean{{g.class_means[0][0], g.class_means[0][1]}};
    CHECK(mahalanobis_score(g, at_mean).scores[0] == 0.0);
    const Matrix origin{{0.0, 0.0}};
    CHECK(mahalanobis_score(g, origin).scores[0] == doctest::Approx(-1.0).epsilon(1e-12));
    const GaussianModel ridged = fit_gaussian(train, y, 2);
    CHECK(std::abs(mahalanobis_score(ridged, origin).scores[0] + 1.0) < 1e-5);
  }

  TEST_CASE("matches an explicit-inverse oracle") {
    Rng rng(14);
    const std::size_t m = 300, k = 5;
    const Matrix train = gen::logits(rng, m, k);
    const auto y = cyclic_labels(m, k);
    const GaussianModel g = fit_gaussian(train, y, k);
    oracle::Mat cov(k, oracle::Vec(k));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        cov[a][b] = g.shared_covariance(a, b) + (a == b ? g.ridge : 0.0);
      }
    }
    const auto inv = oracle::inverse(cov);
    const Matrix test = gen::logits(rng, 50, k);
    const auto s = mahalanobis_score(g, test).scores;
    for (std::size_t i = 0; i < test.rows(); ++i) {
      double best = INFINITY;
      for (std::size_t c = 0; c < k; ++c) {
        oracle::Vec d(k);
        for (std::size_t j = 0; j < k; ++j) d[j] = test(i, j) - g.class_means[c][j];
        best = std::min(best, oracle::quadratic_form(d, inv));
      }
      CHECK(s[i] <= 0.0);
      CHECK(std::abs(s[i] + best) <= 1e-8);
    }
  }

  TEST_CASE("invariant under an invertible affine map with zero ridge") {
    Rng rng(15);
    const std::size_t m = 240, k = 3;
    const Matrix train = gen::logits(rng, m, k);
    const auto y = cyclic_labels(m, k);
    const Matrix test = gen::logits(rng, 40, k);
    const double a[3][3] = {{2.0, 0.5, 0.0}, {-0.3, 1.5, 0.2}, {0.1, 0.0, 0.8}};
    const double b[3] = {5.0, -2.0, 0.5};
    auto map = [&](const Matrix& x) {
      Matrix out(x.rows(), k);
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t r = 0; r < k; ++r) {
          double s = b[r];
          for (std::size_t c = 0; c < k; ++c) s += a[r][c] * x(i, c);
          out(i, r) = s;
        }
      }
      return out;
    };
    const auto s1 = mahalanobis_score(fit_gaussian(train, y, k, {.ridge = 0.0}), test).scores;
    const auto s2 =
        mahalanobis_score(fit_gaussian(map(train), y, k, {.ridge = 0.0}), map(test)).scores;
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(std::abs(s1[i] - s2[i]) <= 1e-6);
  }

  TEST_CASE("dimension mismatch") {
    const Matrix train{{1, 0}, {2, 0}, {0, 1}, {0, 3}};
    const GaussianModel g = fit_gaussian(train, std::vector<int>{0, 0, 1, 1}, 2);
    CHECK_THROWS_AS(mahalanobis_score(g, Matrix(2, 3, 0.0)), Error);
  }
}

TEST_SUITE("mc passes") {
  TEST_CASE("identical passes reduce to the single-pass detector") {
    Rng rng(16);
    const Matrix m = gen::logits(rng, 40, 5);
    const std::vector<Matrix> passes{m, m, m};
    const auto mc = mc_dropout_score(passes).scores;
    const auto base = max_softmax_score(m).scores;
    for (std::size_t i = 0; i < mc.size(); ++i) CHECK(std::abs(mc[i] - base[i]) <= 1e-15);
    // averaging three equal values can round in the last bit
    for (double s : mutual_information_score(passes).scores) CHECK(std::abs(s) <= 1e-12);
  }

  TEST_CASE("two opposite one-hot passes") {
    const std::vector<Matrix> passes{Matrix{{800.0, 0.0}}, Matrix{{0.0, 800.0}}};
    CHECK(mc_dropout_score(passes).scores[0] == 0.5);
    CHECK(std::abs(mutual_information_score(passes).scores[0] + std::log(2.0)) <= 1e-9);
  }

  TEST_CASE("random passes match loop oracles; MI obeys Jensen") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t s = gen::size_in(rng, 2, 8), k = gen::size_in(rng, 2, 11), n = 15;
      std::vector<Matrix> passes;
      for (std::size_t p = 0; p < s; ++p) passes.push_back(gen::logits(rng, n, k));
      const auto mc = mc_dropout_score(passes).scores;
      const auto mi = mutual_information_score(passes).scores;
      for (std::size_t i = 0; i < n; ++i) {
        oracle::Vec mean(k, 0.0);
        double mean_h = 0;
        for (const Matrix& pass : passes) {
          const auto p = oracle::softmax(to_vec(pass.row(i)));
          for (std::size_t j = 0; j < k; ++j) mean[j] += p[j] / static_cast<double>(s);
          mean_h += oracle::entropy(p) / static_cast<double>(s);
        }
        CHECK(std::abs(mc[i] - *std::max_element(mean.begin(), mean.end())) <= 1e-10);
        const double h_mean = oracle::entropy(mean);
        CHECK(h_mean >= mean_h - 1e-10);
        CHECK(std::abs(mi[i] + std::max(0.0, h_mean - mean_h)) <= 1e-9);
        CHECK(mi[i] <= 0.0);
      }
    }
  }

  TEST_CASE("pass validation") {
    const std::vector<Matrix> one{Matrix(3, 2, 0.0)};
    CHECK_THROWS_AS(mc_dropout_score(one), Error);
    const std::vector<Matrix> ragged{Matrix(3, 2, 0.0), Matrix(4, 2, 0.0)};
    CHECK_THROWS_AS(mutual_information_score(ragged), Error);
    const std::vector<Matrix> wide{Matrix(3, 2, 0.0), Matrix(3, 3, 0.0)};
    CHECK_THROWS_AS(mc_dropout_score(wide), Error);
  }
}

// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <random>

#include "../common/expect.hpp"
#include "../common/stub_codec.hpp"
#include "doctest.h"
#include "faders/eval/metrics.hpp"

using namespace faders;

namespace {

// Normal equations for y = a x + b, then R^2 from residuals.
double ols_r2_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  const double a = (n * sxy - sx * sy) / det;
  const double b = (sy - a * sx) / n;
  const double mean = sy / n;
  double res = 0, tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    res += (y[i] - a * x[i] - b) * (y[i] - a * x[i] - b);
    tot += (y[i] - mean) * (y[i] - mean);
  }
  return 1.0 - res / tot;
}

double dist(const ProjectedPoint& a, const ProjectedPoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

TEST_SUITE("eval_harness") {
  TEST_CASE("slide_values") {
    const auto a = slide_values(0, 1, 8);
    REQUIRE(a.size() == 8);
    for (std::size_t t = 0; t < 8; ++t) CHECK(std::abs(a[t] - 0.125 * static_cast<double>(t + 1)) <= 1e-9);
    CHECK(a.back() == 1.0);
    CHECK(slide_values(5, 5, 8) == std::vector<double>(8, 5.0));
    const auto b = slide_values(-1, 1, 4);
    const std::vector<double> expected = {-0.5, 0.0, 0.5, 1.0};
    for (std::size_t t = 0; t < 4; ++t) CHECK(std::abs(b[t] - expected[t]) <= 1e-9);
    CHECK_FADERS_ERROR(slide_values(0, 1, 1), ErrorCode::InvalidSweep);
    CHECK_FADERS_ERROR(slide_values(1, 0, 8), ErrorCode::InvalidSweep);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 200; ++i) {
      double lo = u(gen), hi = u(gen);
      if (lo > hi) std::swap(lo, hi);
      if (lo == hi) continue;
      const auto v = slide_values(lo, hi, 2 + static_cast<std::size_t>(i % 20));
      for (std::size_t t = 1; t < v.size(); ++t) CHECK(v[t] > v[t - 1]);
      CHECK(v.front() > lo);
    }
  }

  TEST_CASE("consistency_score") {
    CHECK(consistency_score({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}) == 1.0);
    CHECK(std::abs(consistency_score({{0, 1}, {1, 0}, {0, 1}, {1, 0}}) - 0.5) <= 1e-9);
    const double expected = 1.0 - (std::sqrt(2.0 / 3.0) + std::sqrt(8.0 / 3.0)) / 2.0;
    CHECK(std::abs(consistency_score({{1, 2}, {2, 4}, {3, 6}}) - expected) <= 1e-9);
    CHECK_FADERS_ERROR(consistency_score({{1, 2}}), ErrorCode::InsufficientSamples);
  }

  TEST_CASE("restrictiveness_score") {
    CHECK(restrictiveness_score({{0.2, 0.2, 0.2}, {0.9, 0.9, 0.9}}) == 1.0);
    CHECK(std::abs(restrictiveness_score({{0, 1, 0, 1}, {1, 1, 1, 1}}) - 0.75) <= 1e-9);
    CHECK(std::abs(restrictiveness_score({{0, 0, 0, 4}, {2, 2, 2, 2}}) - (1.0 - std::sqrt(3.0) / 2.0)) <= 1e-9);
    CHECK_FADERS_ERROR(restrictiveness_score({{1}, {2}}), ErrorCode::InsufficientSamples);
  }

  TEST_CASE("linearity_score") {
    const std::vector<double> x = {0, 1, 2, 3};
    CHECK(std::abs(linearity_score(x, std::vector<double>{1, 3, 5, 7}) - 1.0) <= 1e-9);
    CHECK(linearity_score(x, std::vector<double>{2, 2, 2, 2}) == 0.0);
    const std::vector<double> y = {1, 3, 2, 5};
    CHECK(std::abs(linearity_score(x, y) - 6.05 / 8.75) <= 1e-9);
    CHECK(std::abs(linearity_score(x, y) - ols_r2_oracle(x, y)) <= 1e-9);
    CHECK_FADERS_ERROR(linearity_score(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ErrorCode::InsufficientSamples);
  }

  TEST_CASE("score properties") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t M = 2 + static_cast<std::size_t>(trial % 7), T = 2 + static_cast<std::size_t>(trial % 5);
      Matrix m(M, std::vector<double>(T));
      for (auto& row : m) {
        for (auto& v : row) v = u(gen);
      }
      const double c = consistency_score(m), r = restrictiveness_score(m);
      CHECK(c <= 1.0);
      CHECK(r <= 1.0);
      Matrix perm = m;
      std::shuffle(perm.begin(), perm.end(), gen);
      CHECK(std::abs(consistency_score(perm) - c) <= 1e-12);
      CHECK(std::abs(restrictiveness_score(perm) - r) <= 1e-12);

      std::vector<double> x(M * T), y(M * T), x2(M * T);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = u(gen);
        y[i] = 0.7 * x[i] + u(gen);
        x2[i] = -3.0 * x[i] + 11.0;
      }
      if (x.size() < 3) continue;
      const double l = linearity_score(x, y);
      CHECK(l <= 1.0);
      CHECK(l >= 0.0);
      CHECK(std::abs(linearity_score(x2, y) - l) <= 1e-9);
      CHECK(std::abs(l - ols_r2_oracle(x, y)) <= 1e-9);
    }
  }

  TEST_CASE("project_latents") {
    // three collinear points: principal axis (1,1)/sqrt2
    auto p = project_latents({{1, 1}, {2, 2}, {3, 3}}, {"a", "b", "c"});
    REQUIRE(p.size() == 3);
    CHECK(std::abs(std::abs(p[0].x) - std::sqrt(2.0)) <= 1e-9);
    CHECK(std::abs(p[1].x) <= 1e-9);
    CHECK(std::abs(p[0].x + p[2].x) <= 1e-9);
    for (const auto& q : p) CHECK(std::abs(q.y) <= 1e-9);
    CHECK(p[2].label == "c");

    const std::vector<std::vector<double>> pts = {{0.3, 1.2}, {-2.0, 0.5}, {1.1, -0.7}, {0.0, 2.2}, {4.0, 1.0}};
    p = project_latents(pts, std::vector<std::string>(pts.size(), "x"));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const double d = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
        CHECK(std::abs(dist(p[i], p[j]) - d) <= 1e-9);
      }
    }

    std::vector<std::vector<double>> dup = {{1, 2, 3}, {0, 1, 5}, {1, 2, 3}, {4, 0, 1}};
    p = project_latents(dup, std::vector<std::string>(4, ""));
    CHECK(p[0].x == p[2].x);
    CHECK(p[0].y == p[2].y);
    CHECK_FADERS_ERROR(project_latents({{1, 2}}, {"a"}), ErrorCode::InsufficientSamples);
  }

  TEST_CASE("identity stub sweep") {
    const auto recs = synth_corpus(100, 0.0, 6);
    const std::vector<CorpusRecord> test(recs.begin(), recs.begin() + 20);
    faders::testing::IdentityStub stub(test);
    const auto s = fader_sweep(stub, test, Feature::Rhythm, 8, 10, 3);
    CHECK(s.rhythm.size() == 10);
    CHECK(s.note.size() == 10);
    CHECK(s.values == slide_values(-1, 1, 8));
    for (std::size_t m = 0; m < 10; ++m) {
      REQUIRE(s.rhythm[m].size() == 8);
      for (std::size_t t = 1; t < 8; ++t) {
        CHECK(s.rhythm[m][t] == s.rhythm[m][0]);
        CHECK(s.note[m][t] == s.note[m][0]);
      }
      CHECK(s.rhythm[m][0] == test[s.samples[m]].densities.rhythm_density);
    }
    std::vector<std::size_t> sorted = s.samples;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    const auto again = fader_sweep(stub, test, Feature::Rhythm, 8, 10, 3);
    CHECK(again.samples == s.samples);
    CHECK(again.rhythm == s.rhythm);
    CHECK(fader_sweep(stub, test, Feature::Note, 8, 500, 3).rhythm.size() == 20);
    CHECK_FADERS_ERROR(fader_sweep(stub, std::vector<CorpusRecord>{}, Feature::Note, 8, 5, 3), ErrorCode::EmptyCorpus);

    // z-independent outputs: every row is flat
    const auto report = evaluate(stub, test, 8, 10, 3);
    for (const auto& f : report.scores) CHECK(f.restrictiveness == 1.0);
    // homogeneous test set: columns are flat as well
    const std::vector<CorpusRecord> same(12, recs[0]);
    faders::testing::IdentityStub stub2(same);
    const auto flat = evaluate(stub2, same, 8, 12, 3);
    for (const auto& f : flat.scores) {
      CHECK(f.consistency == 1.0);
      CHECK(f.restrictiveness == 1.0);
    }
    CHECK(report_to_json(report) == report_to_json(evaluate(stub, test, 8, 10, 3)));
    CHECK(report.checkpoint_id == "identity-stub");
    const auto csv = reports_csv({{"stub, quoted", report}});
    CHECK(csv.find("\"stub, quoted\"") != std::string::npos);
  }
}

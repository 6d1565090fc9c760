// Copyright 2026 The aretrim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aretrim/pipeline.hpp"

using namespace aretrim;
using Catch::Matchers::WithinAbs;

namespace {

Gmm two_blob_generator(double gap) {
  Gmm g;
  g.weights = {0.5, 0.5};
  g.components.push_back(DiagGaussian{{0.0, 0.0}, {1.0, 1.0}});
  g.components.push_back(DiagGaussian{{gap, 0.0}, {1.0, 1.0}});
  return g;
}

TrainConfig small_config(int k, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.k = k;
  cfg.kmeans.seed = Seed{seed};
  return cfg;
}

}  // namespace

TEST_CASE("conventional training recovers clean blobs") {
  const Gmm gen = two_blob_generator(10.0);
  const Dataset data = sample_gmm(gen, 3000, Seed{1}).data;
  const TrainedModel tm = train_conventional(data, small_config(2, 2));
  CHECK(tm.retained_fraction == 1.0);
  const double tol = 4.0 / std::sqrt(1500.0);
  auto near_mean = [&](double mx) {
    for (const auto& comp : tm.model.components)
      if (std::abs(comp.mean[0] - mx) < tol && std::abs(comp.mean[1]) < tol)
        return true;
    return false;
  };
  CHECK(near_mean(0.0));
  CHECK(near_mean(10.0));
}

TEST_CASE("training is deterministic per seed") {
  const Gmm gen = random_gmm(3, 3, Seed{3});
  const Dataset data = sample_gmm(gen, 400, Seed{4}).data;
  const TrainedModel a = train_conventional(data, small_config(3, 5));
  const TrainedModel b = train_conventional(data, small_config(3, 5));
  CHECK(gmm_to_json(a.model) == gmm_to_json(b.model));
}

TEST_CASE("too few samples for k errors out") {
  const Dataset data({{0.0}, {1.0}});
  CHECK_THROWS_AS(train_conventional(data, small_config(3, 6)),
                  std::invalid_argument);
}

TEST_CASE("tau = 1 reduces robust training to conventional training") {
  const Gmm gen = random_gmm(4, 3, Seed{7});
  const Dataset data = sample_gmm(gen, 500, Seed{8}).data;
  for (const Metric metric : {Metric::kEuclidean, Metric::kMahalanobis}) {
    TrainConfig cfg = small_config(3, 9);
    cfg.policy = TrimPolicy{metric, 1.0};
    const TrainedModel trimmed = train_are_trim(data, cfg);
    const TrainedModel conv = train_conventional(data, small_config(3, 9));
    CHECK(gmm_to_json(trimmed.model) == gmm_to_json(conv.model));
    CHECK(trimmed.retained_fraction == 1.0);
    CHECK_FALSE(trimmed.dispersion_report.fitted.has_value());
  }
}

TEST_CASE("robust training survives point-mass contamination") {
  const Gmm gen = two_blob_generator(10.0);
  const Dataset clean = sample_gmm(gen, 1000, Seed{10}).data;
  ContaminationSpec spec;
  spec.rate = 0.05;
  spec.mode = ContaminationMode::kPointMass;
  spec.scale = 20.0;
  const Dataset dirty = contaminate(clean, spec, Seed{11}).data;

  TrainConfig cfg = small_config(2, 12);
  cfg.policy = TrimPolicy{Metric::kEuclidean, 0.96};
  const TrainedModel robust = train_are_trim(dirty, cfg);
  const TrainedModel conv = train_conventional(dirty, small_config(2, 12));

  auto worst_mean_error = [&](const Gmm& model) {
    // for each true mean, the distance to the closest component mean
    double worst = 0.0;
    for (const double mx : {0.0, 10.0}) {
      double best = 1e300;
      for (const auto& comp : model.components) {
        const double d = std::hypot(comp.mean[0] - mx, comp.mean[1]);
        best = std::min(best, d);
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  const double robust_err = worst_mean_error(robust.model);
  const double conv_err = worst_mean_error(conv.model);
  CHECK(robust_err < 3.0 * 1.0 / std::sqrt(500.0) + 0.05);
  CHECK(conv_err > robust_err);
  CHECK(robust.retained_fraction < 1.0);
  CHECK(robust.dispersion_report.fitted.has_value());
}

TEST_CASE("retained fraction tracks tau on clean data") {
  const Gmm gen = random_gmm(10, 4, Seed{13});
  const Dataset data = sample_gmm(gen, 2000, Seed{14}).data;
  TrainConfig cfg = small_config(4, 15);
  cfg.policy = TrimPolicy{Metric::kEuclidean, 0.9};
  const TrainedModel tm = train_are_trim(data, cfg);
  CHECK_THAT(tm.retained_fraction, WithinAbs(0.90, 0.04));
}

TEST_CASE("classification picks the generating model") {
  const Gmm a = two_blob_generator(6.0);
  Gmm b = a;
  for (auto& comp : b.components) comp.mean[1] += 8.0;  // shifted copy
  const std::vector<LabeledGmm> models = {{"a", a}, {"b", b}};

  const Dataset chunk_a = sample_gmm(a, 50, Seed{16}).data;
  const ClassifyResult res = classify_chunk(chunk_a, models);
  CHECK(res.best_index == 0);
  CHECK(res.log_likelihoods[0] > res.log_likelihoods[1]);

  SECTION("single model always wins") {
    const ClassifyResult solo = classify_chunk(chunk_a, {{"only", b}});
    CHECK(solo.best_index == 0);
  }
  SECTION("ties break to the lowest index") {
    const ClassifyResult tie = classify_chunk(chunk_a, {{"x", a}, {"y", a}});
    CHECK(tie.best_index == 0);
  }
}

TEST_CASE("chunk splitting keeps the remainder") {
  const Gmm gen = random_gmm(2, 1, Seed{17});
  const Dataset data = sample_gmm(gen, 25, Seed{18}).data;
  const auto chunks = split_chunks(data, 10);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].size() == 10);
  CHECK(chunks[2].size() == 5);
  CHECK_THROWS_AS(split_chunks(data, 0), std::invalid_argument);
}

TEST_CASE("benchmark rows are well formed and reduce correctly") {
  BenchmarkSpec spec;
  spec.num_classes = 3;
  spec.dim = 4;
  spec.samples_per_class = 120;
  spec.test_chunks_per_class = 8;
  spec.chunk_len = 6;
  spec.contamination.rate = 0.0;
  spec.tau_grid = {1.0};
  spec.metrics = {Metric::kEuclidean};
  spec.seeds = {1, 2};
  spec.k = 3;
  spec.gen_components = 2;

  const auto rows = run_benchmark(spec);
  REQUIRE(rows.size() == 4);  // (conventional + 1 cell) x 2 seeds
  for (const auto& r : rows) {
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK(r.mean_retained_fraction > 0.0);
    CHECK(r.mean_retained_fraction <= 1.0);
  }
  // zero contamination, tau = 1: the two methods coincide seedwise
  CHECK(rows[0].accuracy == rows[1].accuracy);
  CHECK(rows[2].accuracy == rows[3].accuracy);
  CHECK(rows[1].mean_retained_fraction == 1.0);

  const std::string csv = benchmark_csv(rows);
  CHECK(csv.find("method,metric,tau,seed,accuracy,mean_retained_fraction,"
                 "mean_train_seconds\n") == 0);
}

TEST_CASE("benchmark spec json parsing names bad fields") {
  const std::string good = R"({
    "num_classes": 3, "dim": 4, "samples_per_class": 100,
    "test_chunks_per_class": 5, "chunk_len": 6,
    "contamination": {"rate": 0.1, "scale": 10, "mode": "point_mass"},
    "tau_grid": [0.96], "metrics": ["euclidean"], "seeds": [1],
    "k": 3, "em": {"max_iters": 20}
  })";
  const BenchmarkSpec spec = benchmark_spec_from_json(good);
  CHECK(spec.num_classes == 3);
  CHECK(spec.em.max_iters == 20);
  CHECK(spec.contamination.mode == ContaminationMode::kPointMass);

  CHECK_THROWS_WITH(benchmark_spec_from_json("{}"),
                    Catch::Matchers::ContainsSubstring("num_classes"));
  CHECK_THROWS_WITH(benchmark_spec_from_json(R"({"num_classes": "x"})"),
                    Catch::Matchers::ContainsSubstring("num_classes"));
  std::string bad_rate = good;
  bad_rate.replace(bad_rate.find("0.1"), 3, "1.5");
  CHECK_THROWS_WITH(benchmark_spec_from_json(bad_rate),
                    Catch::Matchers::ContainsSubstring("contamination.rate"));
}

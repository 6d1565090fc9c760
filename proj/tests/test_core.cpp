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
#include <filesystem>
#include <fstream>

#include "aretrim/core.hpp"
#include "aretrim/io.hpp"
#include "aretrim/rng.hpp"
#include "oracles.hpp"

using namespace aretrim;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "aretrim_test";
  fs::create_directories(dir);
  return dir / name;
}

Dataset random_dataset(std::size_t n, int d, Seed seed) {
  Rng rng(seed);
  std::vector<Vec> rows(n, Vec(d));
  for (auto& row : rows)
    for (auto& v : row) v = rng.uniform(-100.0, 100.0);
  return Dataset(std::move(rows));
}

}  // namespace

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset(std::vector<Vec>{}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset({{1.0, 2.0}, {3.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset({{1.0, std::nan("")}}), std::invalid_argument);
  const Dataset d({{1.0, 2.0}, {3.0, 4.0}});
  CHECK(d.size() == 2);
  CHECK(d.dim() == 2);
}

TEST_CASE("csv loading") {
  const auto path = temp_file("basic.csv");
  {
    std::ofstream out(path);
    out << "1.5,2\n-3,4e2\n0,0\n";
  }
  const Dataset d = load_dataset(path, DatasetFormat::kCsv);
  REQUIRE(d.size() == 3);
  REQUIRE(d.dim() == 2);
  CHECK(d[0][0] == 1.5);
  CHECK(d[1][1] == 400.0);

  SECTION("wrong arity names the line") {
    std::ofstream(path) << "1,2\n1,2,3\n";
    CHECK_THROWS_WITH(load_dataset(path, DatasetFormat::kCsv),
                      Catch::Matchers::ContainsSubstring("line 2"));
  }
  SECTION("non-numeric token names the line") {
    std::ofstream(path) << "1,2\n3,oops\n";
    CHECK_THROWS_WITH(load_dataset(path, DatasetFormat::kCsv),
                      Catch::Matchers::ContainsSubstring("line 2"));
  }
  SECTION("empty file") {
    std::ofstream(path) << "";
    CHECK_THROWS_WITH(load_dataset(path, DatasetFormat::kCsv),
                      Catch::Matchers::ContainsSubstring("empty"));
  }
}

TEST_CASE("dataset round-trips") {
  const Dataset data = random_dataset(57, 5, Seed{11});

  SECTION("csv is value-identical") {
    const auto path = temp_file("roundtrip.csv");
    save_dataset(path, data, DatasetFormat::kCsv);
    const Dataset back = load_dataset(path, DatasetFormat::kCsv);
    REQUIRE(back.size() == data.size());
    for (std::size_t t = 0; t < data.size(); ++t)
      for (int i = 0; i < data.dim(); ++i) CHECK(back[t][i] == data[t][i]);
  }
  SECTION("binary is bit-exact and stable") {
    const auto path = temp_file("roundtrip.bin");
    save_dataset(path, data, DatasetFormat::kBinary);
    const Dataset back = load_dataset(path, DatasetFormat::kBinary);
    for (std::size_t t = 0; t < data.size(); ++t)
      for (int i = 0; i < data.dim(); ++i) CHECK(back[t][i] == data[t][i]);
    const std::string bytes = read_file(path);
    CHECK(bytes.substr(0, 4) == "ATDS");
    save_dataset(path, back, DatasetFormat::kBinary);
    CHECK(read_file(path) == bytes);
  }
  SECTION("binary header is little-endian counts") {
    const std::string bytes = dataset_to_binary(data);
    CHECK(static_cast<unsigned char>(bytes[4]) == 57);
    CHECK(static_cast<unsigned char>(bytes[5]) == 0);
    CHECK(static_cast<unsigned char>(bytes[8]) == 5);
  }
}

TEST_CASE("model file round-trip and validation") {
  Gmm model;
  model.weights = {0.25, 0.75};
  model.components.push_back(DiagGaussian{{0.0, 1.0}, {1.0, 2.0}});
  model.components.push_back(DiagGaussian{{-3.5, 2.25}, {0.5, 0.125}});

  const auto path = temp_file("model.json");
  save_gmm(path, model);
  const Gmm back = load_gmm(path);
  REQUIRE(back.num_components() == 2);
  CHECK(back.weights[1] == 0.75);
  CHECK(back.components[1].mean[0] == -3.5);
  CHECK(back.components[1].var[1] == 0.125);

  SECTION("reader rejects unnormalized weights") {
    std::string text = gmm_to_json(model);
    const auto pos = text.find("0.25");
    text.replace(pos, 4, "0.20");
    CHECK_THROWS_WITH(gmm_from_json(text),
                      Catch::Matchers::ContainsSubstring("sum to 1"));
  }
  SECTION("reader rejects nonpositive variances") {
    Gmm bad = model;
    bad.components[0].var[0] = 0.0;
    CHECK_THROWS(gmm_from_json(gmm_to_json(bad)));
  }
  SECTION("serialization is deterministic") {
    CHECK(gmm_to_json(model) == gmm_to_json(back));
  }
}

TEST_CASE("mask sidecar round-trip") {
  const auto path = temp_file("mask.txt");
  const Mask mask = {1, 0, 0, 1, 1};
  save_mask(path, mask);
  CHECK(load_mask(path) == mask);
}

TEST_CASE("log_density closed forms") {
  const DiagGaussian std1{{0.0}, {1.0}};
  CHECK_THAT(log_density(std1, {0.0}),
             Catch::Matchers::WithinAbs(-0.9189385332046727, 1e-12));
  const DiagGaussian std2{{0.0, 0.0}, {1.0, 1.0}};
  CHECK_THAT(log_density(std2, {0.0, 0.0}),
             Catch::Matchers::WithinAbs(-std::log(2.0 * std::numbers::pi) * 2.0 / 2.0,
                                        1e-12));
  CHECK_THROWS_AS(log_density(std2, {1.0}), std::invalid_argument);
}

TEST_CASE("log_density matches an independent transcription") {
  Rng rng(Seed{42});
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(8));
    DiagGaussian g;
    Vec x(d);
    for (int i = 0; i < d; ++i) {
      g.mean.push_back(rng.uniform(-5.0, 5.0));
      g.var.push_back(rng.uniform(0.05, 8.0));
      x[i] = rng.uniform(-10.0, 10.0);
    }
    long double ref = 0.0L;
    for (int i = 0; i < d; ++i) {
      const long double diff = static_cast<long double>(x[i]) - g.mean[i];
      ref += -0.5L * diff * diff / g.var[i] -
             0.5L * std::log(2.0L * 3.14159265358979323846L * g.var[i]);
    }
    CHECK_THAT(log_density(g, x),
               Catch::Matchers::WithinAbs(static_cast<double>(ref),
                                          1e-12 * std::max(1.0, std::abs((double)ref))));
  }
}

TEST_CASE("density integrates to one in d=1") {
  const DiagGaussian g{{1.3}, {2.7}};
  const double integral = oracles::integrate(
      [&](double x) { return std::exp(log_density(g, {x})); }, 1.3 - 60.0,
      1.3 + 60.0, 1e-10);
  CHECK_THAT(integral, Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("rng determinism and uniformity basics") {
  Rng a(Seed{123}), b(Seed{123});
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng rng(Seed{9});
  double mean = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) mean += rng.normal();
  mean /= n;
  CHECK(std::abs(mean) < 0.01);

  // derive_seed produces distinct streams
  CHECK(derive_seed(Seed{1}, 0).value != derive_seed(Seed{1}, 1).value);
  CHECK(derive_seed(Seed{1}, 0).value != derive_seed(Seed{2}, 0).value);
}

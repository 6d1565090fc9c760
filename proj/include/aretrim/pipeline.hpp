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

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aretrim/core.hpp"
#include "aretrim/dispersion.hpp"
#include "aretrim/em.hpp"
#include "aretrim/kmeans.hpp"
#include "aretrim/synth.hpp"

namespace aretrim {

// Full training recipe. cfg.k is authoritative; the embedded kmeans config
// contributes iteration/tolerance/seed settings.
struct TrainConfig {
  int k = 32;
  KmeansConfig kmeans;
  EmConfig em;
  std::optional<TrimPolicy> policy;  // absent = conventional training
  bool em_retrim = true;  // recompute the trim mask before EM and fit on it
};

struct DispersionReport {
  std::optional<DispersionModel> fitted;
  double nu_euclidean = 0.0;
  double nu_mahalanobis = 0.0;
};

struct TrainedModel {
  Gmm model;
  double retained_fraction = 1.0;
  DispersionReport dispersion_report;
  std::vector<EmTraceRow> ll_trace;
};

namespace detail {

inline Dataset subset(const Dataset& data, const Mask& mask) {
  std::vector<Vec> rows;
  for (std::size_t t = 0; t < data.size(); ++t)
    if (mask[t]) rows.push_back(data[t]);
  return Dataset(std::move(rows));
}

inline KmeansConfig kmeans_config(const TrainConfig& cfg) {
  KmeansConfig kc = cfg.kmeans;
  kc.k = cfg.k;
  return kc;
}

}  // namespace detail

// K-means initialisation followed by EM over the full population.
inline TrainedModel train_conventional(const Dataset& data, const TrainConfig& cfg) {
  if (cfg.policy && cfg.policy->tau != 1.0)
    throw std::invalid_argument(
        "train_conventional: a trim policy with tau < 1 was supplied");
  const Clustering c = kmeans(data, detail::kmeans_config(cfg));
  const Gmm init = gmm_from_clustering(data, c, cfg.em.variance_floor_factor);
  EmResult em = em_fit(data, init, cfg.em);
  TrainedModel out;
  out.model = std::move(em.model);
  out.retained_fraction = 1.0;
  out.dispersion_report.nu_euclidean = euclidean_dof(out.model);
  out.dispersion_report.nu_mahalanobis = mahalanobis_dof(out.model);
  out.ll_trace = std::move(em.trace);
  return out;
}

// Robust training: trimmed K-means initialisation, then (by default) one
// trim-mask refresh against the initial mixture before EM runs on the
// retained samples. With tau = 1.0 this reduces bit-identically to
// train_conventional under the same seed.
inline TrainedModel train_are_trim(const Dataset& data, const TrainConfig& cfg) {
  if (!cfg.policy)
    throw std::invalid_argument("train_are_trim: a trim policy is required");
  check_policy(*cfg.policy);
  const TrimPolicy policy = *cfg.policy;

  const TrimCallback trim = [](const Dataset& d, const Gmm& m,
                               const TrimPolicy& p) { return trim_mask(d, m, p); };
  const Clustering c =
      trimmed_kmeans(data, detail::kmeans_config(cfg), policy, trim);
  const Gmm init = gmm_from_clustering(data, c, cfg.em.variance_floor_factor);

  TrainedModel out;
  out.dispersion_report.fitted = std::nullopt;
  EmResult em;
  if (cfg.em_retrim) {
    DispersionModel fitted{};
    const Mask mask = trim_mask(data, init, policy, &fitted);
    if (fitted.n_fit > 0) out.dispersion_report.fitted = fitted;
    std::size_t kept = 0;
    for (auto b : mask) kept += b;
    if (kept == data.size()) {
      out.retained_fraction = 1.0;
      em = em_fit(data, init, cfg.em);
    } else {
      out.retained_fraction =
          static_cast<double>(kept) / static_cast<double>(data.size());
      em = em_fit(detail::subset(data, mask), init, cfg.em);
    }
  } else {
    out.retained_fraction = c.retained_fraction();
    em = em_fit(data, init, cfg.em);
  }
  out.model = std::move(em.model);
  out.dispersion_report.nu_euclidean = euclidean_dof(out.model);
  out.dispersion_report.nu_mahalanobis = mahalanobis_dof(out.model);
  out.ll_trace = std::move(em.trace);
  return out;
}

struct LabeledGmm {
  std::string label;
  Gmm model;
};

struct ClassifyResult {
  int best_index;
  std::vector<double> log_likelihoods;
};

// Maximum-likelihood decision: total weighted log-likelihood of the chunk
// under each candidate model; ties go to the lowest index.
inline ClassifyResult classify_chunk(const Dataset& chunk,
                                     const std::vector<LabeledGmm>& models) {
  if (models.empty())
    throw std::invalid_argument("classify_chunk: no models supplied");
  ClassifyResult res;
  res.best_index = 0;
  res.log_likelihoods.resize(models.size());
  for (std::size_t j = 0; j < models.size(); ++j) {
    res.log_likelihoods[j] = gmm_log_likelihood(chunk, models[j].model);
    if (res.log_likelihoods[j] > res.log_likelihoods[res.best_index])
      res.best_index = static_cast<int>(j);
  }
  return res;
}

// Consecutive blocks of chunk_len samples; a shorter final block is kept.
inline std::vector<Dataset> split_chunks(const Dataset& data, std::size_t chunk_len) {
  if (chunk_len < 1) throw std::invalid_argument("chunk_len must be positive");
  std::vector<Dataset> chunks;
  std::vector<Vec> rows;
  for (std::size_t t = 0; t < data.size(); ++t) {
    rows.push_back(data[t]);
    if (rows.size() == chunk_len) {
      chunks.emplace_back(std::move(rows));
      rows.clear();
    }
  }
  if (!rows.empty()) chunks.emplace_back(std::move(rows));
  return chunks;
}

struct BenchmarkSpec {
  int num_classes = 10;
  int dim = 20;
  int samples_per_class = 400;
  int test_chunks_per_class = 20;
  int chunk_len = 10;
  ContaminationSpec contamination;
  std::vector<double> tau_grid;
  std::vector<Metric> metrics;
  std::vector<std::uint64_t> seeds;
  int k = 8;
  EmConfig em;
  // Generative task shape: components per class and the box the class
  // means are drawn from. Larger spread separates the classes more.
  int gen_components = 4;
  double gen_spread = 2.0;
};

struct BenchmarkRow {
  std::string method;  // "conventional" or "are-trim"
  std::string metric;  // "none" for conventional
  double tau;
  std::uint64_t seed;
  double accuracy;
  double mean_retained_fraction;
  double mean_train_seconds;
};

namespace detail {

struct BenchmarkTask {
  std::vector<Dataset> train;           // per class, possibly contaminated
  std::vector<Dataset> test_chunks;     // flattened
  std::vector<int> chunk_labels;        // true class per chunk
};

inline BenchmarkTask make_benchmark_task(const BenchmarkSpec& spec,
                                         std::uint64_t seed) {
  BenchmarkTask task;
  const Seed base{seed};
  for (int c = 0; c < spec.num_classes; ++c) {
    const Gmm gen = random_gmm(spec.dim, spec.gen_components,
                               derive_seed(base, 0x100 + c), spec.gen_spread);
    Dataset train =
        sample_gmm(gen, spec.samples_per_class, derive_seed(base, 0x10000 + c))
            .data;
    if (spec.contamination.rate > 0.0)
      train = contaminate(train, spec.contamination,
                          derive_seed(base, 0x20000 + c))
                  .data;
    task.train.push_back(std::move(train));
    for (int j = 0; j < spec.test_chunks_per_class; ++j) {
      task.test_chunks.push_back(
          sample_gmm(gen, spec.chunk_len,
                     derive_seed(base, 0x30000 + c * 1024 + j))
              .data);
      task.chunk_labels.push_back(c);
    }
  }
  return task;
}

inline double benchmark_accuracy(const BenchmarkTask& task,
                                 const std::vector<LabeledGmm>& models) {
  std::size_t hits = 0;
  for (std::size_t j = 0; j < task.test_chunks.size(); ++j)
    if (classify_chunk(task.test_chunks[j], models).best_index ==
        task.chunk_labels[j])
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(task.test_chunks.size());
}

}  // namespace detail

// Trains per-class models under each method and tau, classifies held-out
// chunks, and reports accuracy plus mean retained fraction per cell. Rows
// come out in a fixed (seed, method, metric, tau) order.
inline std::vector<BenchmarkRow> run_benchmark(const BenchmarkSpec& spec) {
  if (spec.num_classes < 2) throw std::invalid_argument("benchmark: need >= 2 classes");
  if (spec.seeds.empty()) throw std::invalid_argument("benchmark: need >= 1 seed");
  std::vector<BenchmarkRow> rows;
  for (const auto seed : spec.seeds) {
    const detail::BenchmarkTask task = detail::make_benchmark_task(spec, seed);

    TrainConfig cfg;
    cfg.k = spec.k;
    cfg.em = spec.em;

    auto fit_all = [&](const std::optional<TrimPolicy>& policy, double& fraction,
                       double& seconds) {
      std::vector<LabeledGmm> models;
      fraction = 0.0;
      const auto t0 = std::chrono::steady_clock::now();
      for (int c = 0; c < spec.num_classes; ++c) {
        TrainConfig cc = cfg;
        cc.policy = policy;
        cc.kmeans.seed = derive_seed(Seed{seed}, 0x40000 + c);
        const TrainedModel tm = policy ? train_are_trim(task.train[c], cc)
                                       : train_conventional(task.train[c], cc);
        fraction += tm.retained_fraction;
        models.push_back({"class_" + std::to_string(c), tm.model});
      }
      const auto t1 = std::chrono::steady_clock::now();
      fraction /= spec.num_classes;
      seconds = std::chrono::duration<double>(t1 - t0).count() / spec.num_classes;
      return models;
    };

    double fraction = 0.0, seconds = 0.0;
    const auto conventional_models = fit_all(std::nullopt, fraction, seconds);
    rows.push_back({"conventional", "none", 1.0, seed,
                    detail::benchmark_accuracy(task, conventional_models),
                    fraction, seconds});
    for (const Metric metric : spec.metrics) {
      for (const double tau : spec.tau_grid) {
        const auto models =
            fit_all(TrimPolicy{metric, tau}, fraction, seconds);
        rows.push_back({"are-trim", metric_name(metric), tau, seed,
                        detail::benchmark_accuracy(task, models), fraction,
                        seconds});
      }
    }
  }
  return rows;
}

inline std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
  std::string out =
      "method,metric,tau,seed,accuracy,mean_retained_fraction,mean_train_seconds\n";
  for (const auto& r : rows) {
    out += r.method + ',' + r.metric + ',' + detail::format_double(r.tau) + ',' +
           std::to_string(r.seed) + ',' + detail::format_double(r.accuracy) +
           ',' + detail::format_double(r.mean_retained_fraction) + ',' +
           detail::format_double(r.mean_train_seconds) + '\n';
  }
  return out;
}

// Benchmark spec file; validation failures name the offending field.
inline BenchmarkSpec benchmark_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("benchmark spec is not valid JSON: ") +
                             e.what());
  }
  BenchmarkSpec spec;
  auto fetch = [&](const char* field, auto& dst) {
    if (!j.contains(field))
      throw std::runtime_error(std::string("benchmark spec: missing field '") +
                               field + "'");
    try {
      j.at(field).get_to(dst);
    } catch (const nlohmann::json::exception&) {
      throw std::runtime_error(std::string("benchmark spec: bad value for '") +
                               field + "'");
    }
  };
  fetch("num_classes", spec.num_classes);
  fetch("dim", spec.dim);
  fetch("samples_per_class", spec.samples_per_class);
  fetch("test_chunks_per_class", spec.test_chunks_per_class);
  fetch("chunk_len", spec.chunk_len);
  fetch("tau_grid", spec.tau_grid);
  fetch("seeds", spec.seeds);
  fetch("k", spec.k);
  if (!j.contains("contamination"))
    throw std::runtime_error("benchmark spec: missing field 'contamination'");
  {
    const auto& jc = j.at("contamination");
    if (!jc.contains("rate"))
      throw std::runtime_error("benchmark spec: missing field 'contamination.rate'");
    jc.at("rate").get_to(spec.contamination.rate);
    if (jc.contains("scale")) jc.at("scale").get_to(spec.contamination.scale);
    if (jc.contains("mode"))
      spec.contamination.mode =
          contamination_mode_from_name(jc.at("mode").get<std::string>());
    try {
      check_contamination(spec.contamination);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("benchmark spec: contamination.rate: ") +
                               e.what());
    }
  }
  if (!j.contains("metrics"))
    throw std::runtime_error("benchmark spec: missing field 'metrics'");
  for (const auto& jm : j.at("metrics")) {
    try {
      spec.metrics.push_back(metric_from_name(jm.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("benchmark spec: metrics: ") + e.what());
    }
  }
  if (j.contains("em")) {
    const auto& je = j.at("em");
    if (je.contains("max_iters")) je.at("max_iters").get_to(spec.em.max_iters);
    if (je.contains("ll_tol")) je.at("ll_tol").get_to(spec.em.ll_tol);
    if (je.contains("variance_floor_factor"))
      je.at("variance_floor_factor").get_to(spec.em.variance_floor_factor);
    if (je.contains("min_weight")) je.at("min_weight").get_to(spec.em.min_weight);
  }
  if (j.contains("gen_components")) j.at("gen_components").get_to(spec.gen_components);
  if (j.contains("gen_spread")) j.at("gen_spread").get_to(spec.gen_spread);
  for (const double tau : spec.tau_grid)
    if (!(tau > 0.0 && tau <= 1.0))
      throw std::runtime_error("benchmark spec: tau_grid entries must lie in (0, 1]");
  return spec;
}

}  // namespace aretrim

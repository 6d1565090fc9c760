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

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "aretrim/core.hpp"
#include "aretrim/rng.hpp"

namespace aretrim {

struct KmeansConfig {
  int k = 32;
  int max_iters = 100;
  double convergence_tol = 1e-6;  // relative change of the objective V
  Seed seed;
};

// Result of a clustering run. labels holds the nearest centroid for every
// sample; only retained samples participate in centroid estimation and in
// the objective.
struct Clustering {
  std::vector<Vec> centroids;
  Assignment labels;
  Mask retained;
  double objective = 0.0;

  double retained_fraction() const {
    std::size_t kept = 0;
    for (auto b : retained) kept += b;
    return static_cast<double>(kept) / static_cast<double>(retained.size());
  }
};

// Intra-class covariance V: summed squared distance of retained samples to
// their assigned centroid.
inline double clustering_objective(const Dataset& data,
                                   const std::vector<Vec>& centroids,
                                   const Assignment& labels, const Mask& retained) {
  double v = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t)
    if (retained[t]) v += squared_distance(data[t], centroids[labels[t]]);
  return v;
}

// k distinct samples chosen uniformly without replacement.
inline std::vector<Vec> init_centroids(const Dataset& data, int k, Seed seed) {
  if (k < 1) throw std::invalid_argument("init_centroids: k must be positive");
  if (static_cast<std::size_t>(k) > data.size())
    throw std::invalid_argument("init_centroids: k exceeds the number of samples");
  Rng rng(seed);
  const auto picks = rng.sample_without_replacement(data.size(), k);
  std::vector<Vec> centroids;
  centroids.reserve(k);
  for (auto idx : picks) centroids.push_back(data[idx]);
  return centroids;
}

// How the clustering loop reaches the dispersion module without depending
// on it: given the data and a provisional model built from the current
// centroids, return the retained mask.
using TrimCallback =
    std::function<Mask(const Dataset&, const Gmm&, const TrimPolicy&)>;

namespace detail {

inline int nearest_centroid(const Vec& x, const std::vector<Vec>& centroids) {
  int best = 0;
  double best_d = squared_distance(x, centroids[0]);
  for (std::size_t k = 1; k < centroids.size(); ++k) {
    const double d = squared_distance(x, centroids[k]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

// Per-cluster per-dimension population variance of retained members,
// floored. Memberless clusters fall back to unit variances.
inline std::vector<Vec> cluster_variances(const Dataset& data,
                                          const Assignment& labels,
                                          const Mask& retained, int k,
                                          const Vec& floor_vec) {
  const int d = data.dim();
  std::vector<Vec> mean(k, Vec(d, 0.0)), var(k, Vec(d, 0.0));
  std::vector<std::size_t> count(k, 0);
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (!retained[t]) continue;
    ++count[labels[t]];
    for (int i = 0; i < d; ++i) mean[labels[t]][i] += data[t][i];
  }
  for (int c = 0; c < k; ++c)
    if (count[c])
      for (int i = 0; i < d; ++i) mean[c][i] /= static_cast<double>(count[c]);
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (!retained[t]) continue;
    for (int i = 0; i < d; ++i) {
      const double dv = data[t][i] - mean[labels[t]][i];
      var[labels[t]][i] += dv * dv;
    }
  }
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < d; ++i) {
      var[c][i] = count[c] ? var[c][i] / static_cast<double>(count[c]) : 1.0;
      if (var[c][i] < floor_vec[i]) var[c][i] = floor_vec[i];
    }
  return var;
}

inline Gmm provisional_model(const std::vector<Vec>& centroids,
                             const std::vector<Vec>& variances) {
  Gmm model;
  const double w = 1.0 / static_cast<double>(centroids.size());
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    model.weights.push_back(w);
    model.components.push_back(DiagGaussian{centroids[c], variances[c]});
  }
  return model;
}

// Moves the centroid of each memberless cluster onto the retained point
// farthest from its assigned centroid. Deterministic: clusters ascending,
// distance ties to the lowest sample index, and only points from clusters
// that keep at least one other member are eligible.
inline void repair_empty_clusters(const Dataset& data, std::vector<Vec>& centroids,
                                  Assignment& labels, const Mask& retained,
                                  std::vector<std::size_t>& count) {
  const int k = static_cast<int>(centroids.size());
  for (int c = 0; c < k; ++c) {
    if (count[c] != 0) continue;
    std::ptrdiff_t pick = -1;
    double pick_d = -1.0;
    for (std::size_t t = 0; t < data.size(); ++t) {
      if (!retained[t] || count[labels[t]] < 2) continue;
      const double d = squared_distance(data[t], centroids[labels[t]]);
      if (d > pick_d) {
        pick_d = d;
        pick = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (pick < 0) continue;  // nothing movable; leave the centroid in place
    --count[labels[pick]];
    labels[pick] = c;
    count[c] = 1;
    centroids[c] = data[pick];
  }
}

// Lloyd iteration with an optional per-iteration trim step. The trim mask is
// rebuilt from scratch each round, so previously trimmed points may return.
// max_iters bounds the trimming rounds; once the objective has converged (or
// the round budget is spent) the mask freezes and plain assign/update sweeps
// run until the assignment is an exact fixed point, so the returned labels
// are nearest-centroid consistent and centroids equal their member means.
inline Clustering lloyd(const Dataset& data, const KmeansConfig& cfg,
                        const TrimPolicy* policy, const TrimCallback* trim,
                        std::vector<double>* objective_trace = nullptr,
                        std::vector<Mask>* mask_trace = nullptr) {
  if (cfg.max_iters < 1)
    throw std::invalid_argument("kmeans: max_iters must be positive");
  if (!(cfg.convergence_tol > 0.0))
    throw std::invalid_argument("kmeans: convergence_tol must be positive");
  const std::size_t n = data.size();
  const int d = data.dim();
  const int k = cfg.k;

  std::vector<Vec> centroids = init_centroids(data, k, cfg.seed);
  Assignment labels(n, 0), prev_labels;
  Mask mask(n, 1), prev_mask;
  double prev_v = std::numeric_limits<double>::infinity();
  double v = 0.0;

  const bool mahalanobis_trim =
      trim && policy && policy->metric == Metric::kMahalanobis;
  Vec floor_vec(d, 1.0);
  if (mahalanobis_trim) {
    floor_vec = global_variance(data);
    for (double& f : floor_vec) f = std::max(0.01 * f, 1e-12);
  }
  // Before the first assignment there is nothing to estimate covariances
  // from; unit variances make the provisional model's class assignment agree
  // with nearest-centroid.
  std::vector<Vec> variances(k, Vec(d, 1.0));

  bool stable = false;
  for (int iter = 0; iter < cfg.max_iters && !stable; ++iter) {
    if (trim) {
      mask = (*trim)(data, detail::provisional_model(centroids, variances),
                     *policy);
    }
    std::vector<std::size_t> count(k, 0);
    std::size_t kept = 0;
    for (std::size_t t = 0; t < n; ++t) {
      labels[t] = nearest_centroid(data[t], centroids);
      if (mask[t]) {
        ++count[labels[t]];
        ++kept;
      }
    }
    if (kept == 0) throw std::runtime_error("trim threshold removed entire dataset");
    repair_empty_clusters(data, centroids, labels, mask, count);

    std::vector<Vec> means(k, Vec(d, 0.0));
    for (std::size_t t = 0; t < n; ++t)
      if (mask[t])
        for (int i = 0; i < d; ++i) means[labels[t]][i] += data[t][i];
    for (int c = 0; c < k; ++c)
      if (count[c])
        for (int i = 0; i < d; ++i) means[c][i] /= static_cast<double>(count[c]);
      else
        means[c] = centroids[c];
    centroids = std::move(means);
    v = clustering_objective(data, centroids, labels, mask);
    if (objective_trace) objective_trace->push_back(v);
    if (mask_trace) mask_trace->push_back(mask);

    if (iter > 0 && labels == prev_labels && mask == prev_mask) {
      stable = true;
      break;
    }
    const bool tol_reached =
        iter > 0 && std::abs(v - prev_v) <=
                        cfg.convergence_tol * std::max(std::abs(prev_v), 1e-300);
    prev_v = v;
    prev_labels = labels;
    prev_mask = mask;
    if (tol_reached) break;
    if (mahalanobis_trim)
      variances = cluster_variances(data, labels, mask, k, floor_vec);
  }

  // Stabilization sweeps on the frozen mask.
  for (int sweep = 0; sweep < 1000 && !stable; ++sweep) {
    Assignment next(n);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t t = 0; t < n; ++t) {
      next[t] = nearest_centroid(data[t], centroids);
      if (mask[t]) ++count[next[t]];
    }
    if (next == labels) {
      stable = true;
      break;
    }
    labels = std::move(next);
    repair_empty_clusters(data, centroids, labels, mask, count);
    std::vector<Vec> means(k, Vec(d, 0.0));
    for (std::size_t t = 0; t < n; ++t)
      if (mask[t])
        for (int i = 0; i < d; ++i) means[labels[t]][i] += data[t][i];
    for (int c = 0; c < k; ++c)
      if (count[c])
        for (int i = 0; i < d; ++i) means[c][i] /= static_cast<double>(count[c]);
      else
        means[c] = centroids[c];
    centroids = std::move(means);
    v = clustering_objective(data, centroids, labels, mask);
    if (objective_trace) objective_trace->push_back(v);
    if (mask_trace) mask_trace->push_back(mask);
  }

  return Clustering{std::move(centroids), std::move(labels), std::move(mask), v};
}

}  // namespace detail

// Conventional K-means over the full population.
inline Clustering kmeans(const Dataset& data, const KmeansConfig& cfg,
                         std::vector<double>* objective_trace = nullptr) {
  return detail::lloyd(data, cfg, nullptr, nullptr, objective_trace);
}

// Trimmed K-means: each round first rebuilds the trimmed set through the
// dispersion rule, then assigns and updates over retained points only.
// With tau = 1.0 the callback retains everything and the run is
// bit-identical to kmeans() under the same seed.
inline Clustering trimmed_kmeans(const Dataset& data, const KmeansConfig& cfg,
                                 const TrimPolicy& policy,
                                 const TrimCallback& trim,
                                 std::vector<double>* objective_trace = nullptr,
                                 std::vector<Mask>* mask_trace = nullptr) {
  check_policy(policy);
  if (!trim) throw std::invalid_argument("trimmed_kmeans: trim callback is required");
  return detail::lloyd(data, cfg, &policy, &trim, objective_trace, mask_trace);
}

}  // namespace aretrim
